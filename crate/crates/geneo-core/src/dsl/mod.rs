//! Textual string-diagram language.
//!
//! ```text
//! program := decl*
//! decl    := "sort" IDENT ";"
//!          | "gen" IDENT ":" word "->" word ("@" NUMBER)? ";"
//!          | "diagram" IDENT "=" expr ";"
//! word    := "1" | IDENT ("*" IDENT)*
//! expr    := term (";" term)*
//! term    := factor ("*" factor)*
//! factor  := IDENT | "id[" IDENT "]" | "swap[" IDENT "," IDENT "]"
//!          | "copy[" IDENT "]" | "discard[" IDENT "]" | "empty" | "(" expr ")"
//! ```
//!
//! `#` starts a line comment. `a ; b` is the left-to-right pipeline (run `a`,
//! then `b`), and `*` is parallel composition, binding tighter than `;`.

mod complexity;
mod semantics;

pub use complexity::{complexity, complexity_of_ast, ComplexityAssignment};
pub use semantics::{evaluate_semantics, Interpretation};

use std::collections::BTreeMap;

use crate::error::DslError;

/// A word over the sort set: the (ordered) list of wire types.
pub type Word = Vec<String>;

pub fn word_to_string(w: &[String]) -> String {
    if w.is_empty() {
        "1".to_string()
    } else {
        w.join("*")
    }
}

/// Generator declaration: arity, coarity and an optional default complexity.
#[derive(Debug, Clone, PartialEq)]
pub struct GenDecl {
    pub arity: Word,
    pub coarity: Word,
    pub default_complexity: Option<f64>,
}

/// A monoidal signature: sort names plus typed generator symbols.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    sorts: Vec<String>,
    generators: BTreeMap<String, GenDecl>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    pub fn declare_sort(&mut self, name: impl Into<String>) -> Result<(), DslError> {
        let name = name.into();
        if self.sorts.iter().any(|s| *s == name) || self.generators.contains_key(&name) {
            return Err(DslError::Duplicate { line: 0, col: 0, name });
        }
        self.sorts.push(name);
        Ok(())
    }

    pub fn declare_generator(
        &mut self,
        name: impl Into<String>,
        decl: GenDecl,
    ) -> Result<(), DslError> {
        let name = name.into();
        if self.generators.contains_key(&name) || self.sorts.iter().any(|s| *s == name) {
            return Err(DslError::Duplicate { line: 0, col: 0, name });
        }
        for s in decl.arity.iter().chain(decl.coarity.iter()) {
            if !self.has_sort(s) {
                return Err(DslError::UnknownSort(s.clone()));
            }
        }
        if let Some(c) = decl.default_complexity {
            if c.is_nan() || c < 0.0 {
                return Err(DslError::InvalidComplexity(c, name));
            }
        }
        self.generators.insert(name, decl);
        Ok(())
    }

    pub fn has_sort(&self, name: &str) -> bool {
        self.sorts.iter().any(|s| s == name)
    }

    pub fn sorts(&self) -> &[String] {
        &self.sorts
    }

    pub fn generator(&self, name: &str) -> Option<&GenDecl> {
        self.generators.get(name)
    }

    pub fn generators(&self) -> impl Iterator<Item = (&String, &GenDecl)> {
        self.generators.iter()
    }
}

/// Abstract syntax of a diagram. `Seq(a, b)` runs `a` then `b`; `Par(a, b)`
/// stacks `a` on top of `b`.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagramAst {
    Gen(String),
    Empty,
    Id(String),
    Swap(String, String),
    Copy(String),
    Discard(String),
    Seq(Box<DiagramAst>, Box<DiagramAst>),
    Par(Box<DiagramAst>, Box<DiagramAst>),
}

impl DiagramAst {
    pub fn seq(a: DiagramAst, b: DiagramAst) -> DiagramAst {
        DiagramAst::Seq(Box::new(a), Box::new(b))
    }

    pub fn par(a: DiagramAst, b: DiagramAst) -> DiagramAst {
        DiagramAst::Par(Box::new(a), Box::new(b))
    }
}

/// A diagram together with its checked input and output words.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedDiagram {
    pub ast: DiagramAst,
    pub input: Word,
    pub output: Word,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    KwSort,
    KwGen,
    KwDiagram,
    KwId,
    KwSwap,
    KwCopy,
    KwDiscard,
    KwEmpty,
    Semi,
    Colon,
    Arrow,
    At,
    Star,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Eq,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, DslError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars>, line: &mut usize, col: &mut usize| {
            let c = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars, &mut line, &mut col);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars, &mut line, &mut col);
                }
            }
            ';' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::Semi, line: tline, col: tcol });
            }
            ':' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::Colon, line: tline, col: tcol });
            }
            '@' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::At, line: tline, col: tcol });
            }
            '*' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::Star, line: tline, col: tcol });
            }
            '[' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::LBracket, line: tline, col: tcol });
            }
            ']' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::RBracket, line: tline, col: tcol });
            }
            '(' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::LParen, line: tline, col: tcol });
            }
            ')' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::RParen, line: tline, col: tcol });
            }
            ',' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::Comma, line: tline, col: tcol });
            }
            '=' => {
                bump(&mut chars, &mut line, &mut col);
                out.push(Spanned { tok: Tok::Eq, line: tline, col: tcol });
            }
            '-' => {
                bump(&mut chars, &mut line, &mut col);
                match chars.peek() {
                    Some('>') => {
                        bump(&mut chars, &mut line, &mut col);
                        out.push(Spanned { tok: Tok::Arrow, line: tline, col: tcol });
                    }
                    _ => {
                        return Err(DslError::Lex {
                            line: tline,
                            col: tcol,
                            msg: "expected '->'".into(),
                        })
                    }
                }
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    let in_exponent = matches!(text.chars().last(), Some('e') | Some('E'));
                    let continues = c.is_ascii_digit()
                        || c == '.'
                        || c == 'e'
                        || c == 'E'
                        || ((c == '+' || c == '-') && in_exponent);
                    if !continues {
                        break;
                    }
                    text.push(bump(&mut chars, &mut line, &mut col));
                }
                let value: f64 = text.parse().map_err(|_| DslError::Lex {
                    line: tline,
                    col: tcol,
                    msg: format!("bad number literal '{text}'"),
                })?;
                out.push(Spanned { tok: Tok::Number(value), line: tline, col: tcol });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        text.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                let tok = match text.as_str() {
                    "sort" => Tok::KwSort,
                    "gen" => Tok::KwGen,
                    "diagram" => Tok::KwDiagram,
                    "id" => Tok::KwId,
                    "swap" => Tok::KwSwap,
                    "copy" => Tok::KwCopy,
                    "discard" => Tok::KwDiscard,
                    "empty" => Tok::KwEmpty,
                    _ => Tok::Ident(text),
                };
                out.push(Spanned { tok, line: tline, col: tcol });
            }
            other => {
                return Err(DslError::Lex {
                    line: tline,
                    col: tcol,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    sig: Signature,
    diagrams: BTreeMap<String, DiagramAst>,
}

/// Parses a program into its signature and named diagram ASTs. Every error
/// carries the line and column where it was detected.
pub fn parse(src: &str) -> Result<(Signature, BTreeMap<String, DiagramAst>), DslError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, sig: Signature::new(), diagrams: BTreeMap::new() };
    while !p.at_end() {
        p.decl()?;
    }
    Ok((p.sig, p.diagrams))
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .or_else(|| self.toks.last().map(|s| (s.line, s.col + 1)))
            .unwrap_or((1, 1))
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, DslError> {
        let (line, col) = self.here();
        match self.bump() {
            Some(s) if s.tok == tok => Ok(s),
            Some(s) => Err(DslError::Parse {
                line: s.line,
                col: s.col,
                msg: format!("expected {what}, found {:?}", s.tok),
            }),
            None => Err(DslError::Parse { line, col, msg: format!("expected {what}, found end of input") }),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), DslError> {
        let (line, col) = self.here();
        match self.bump() {
            Some(Spanned { tok: Tok::Ident(name), line, col }) => Ok((name, line, col)),
            Some(s) => Err(DslError::Parse {
                line: s.line,
                col: s.col,
                msg: format!("expected {what}, found {:?}", s.tok),
            }),
            None => Err(DslError::Parse { line, col, msg: format!("expected {what}, found end of input") }),
        }
    }

    fn decl(&mut self) -> Result<(), DslError> {
        let (line, col) = self.here();
        match self.bump().map(|s| s.tok) {
            Some(Tok::KwSort) => {
                let (name, nline, ncol) = self.expect_ident("sort name")?;
                self.expect(Tok::Semi, "';'")?;
                self.sig.declare_sort(name.clone()).map_err(|_| DslError::Duplicate {
                    line: nline,
                    col: ncol,
                    name,
                })
            }
            Some(Tok::KwGen) => {
                let (name, nline, ncol) = self.expect_ident("generator name")?;
                self.expect(Tok::Colon, "':'")?;
                let arity = self.word()?;
                self.expect(Tok::Arrow, "'->'")?;
                let coarity = self.word()?;
                let default_complexity = if matches!(self.peek().map(|s| &s.tok), Some(Tok::At)) {
                    self.bump();
                    let (cline, ccol) = self.here();
                    match self.bump() {
                        Some(Spanned { tok: Tok::Number(v), .. }) => Some(v),
                        _ => {
                            return Err(DslError::Parse {
                                line: cline,
                                col: ccol,
                                msg: "expected a number after '@'".into(),
                            })
                        }
                    }
                } else {
                    None
                };
                self.expect(Tok::Semi, "';'")?;
                self.sig
                    .declare_generator(name.clone(), GenDecl { arity, coarity, default_complexity })
                    .map_err(|e| match e {
                        DslError::Duplicate { .. } => DslError::Duplicate { line: nline, col: ncol, name: name.clone() },
                        other => other,
                    })
            }
            Some(Tok::KwDiagram) => {
                let (name, nline, ncol) = self.expect_ident("diagram name")?;
                if self.diagrams.contains_key(&name) {
                    return Err(DslError::Duplicate { line: nline, col: ncol, name });
                }
                self.expect(Tok::Eq, "'='")?;
                let ast = self.expr()?;
                self.expect(Tok::Semi, "';'")?;
                self.diagrams.insert(name, ast);
                Ok(())
            }
            Some(other) => Err(DslError::Parse {
                line,
                col,
                msg: format!("expected 'sort', 'gen' or 'diagram', found {other:?}"),
            }),
            None => Err(DslError::Parse { line, col, msg: "unexpected end of input".into() }),
        }
    }

    fn word(&mut self) -> Result<Word, DslError> {
        if let Some(Spanned { tok: Tok::Number(v), line, col }) = self.peek().cloned() {
            if v == 1.0 {
                self.bump();
                return Ok(Vec::new());
            }
            return Err(DslError::Parse { line, col, msg: "only '1' denotes the empty word".into() });
        }
        let mut parts = Vec::new();
        loop {
            let (name, line, col) = self.expect_ident("sort name")?;
            if !self.sig.has_sort(&name) {
                return Err(DslError::Unknown { line, col, name });
            }
            parts.push(name);
            if matches!(self.peek().map(|s| &s.tok), Some(Tok::Star)) {
                self.bump();
            } else {
                break;
            }
        }
        Ok(parts)
    }

    fn expr(&mut self) -> Result<DiagramAst, DslError> {
        let mut acc = self.term()?;
        while matches!(self.peek().map(|s| &s.tok), Some(Tok::Semi)) {
            // `;` only continues the pipeline when another term follows;
            // otherwise it terminates the declaration.
            if self.is_decl_end() {
                break;
            }
            self.bump();
            let rhs = self.term()?;
            acc = DiagramAst::seq(acc, rhs);
        }
        Ok(acc)
    }

    fn is_decl_end(&self) -> bool {
        // A ';' ends the diagram declaration when not followed by a factor.
        match self.toks.get(self.pos + 1).map(|s| &s.tok) {
            Some(Tok::Ident(_))
            | Some(Tok::KwId)
            | Some(Tok::KwSwap)
            | Some(Tok::KwCopy)
            | Some(Tok::KwDiscard)
            | Some(Tok::KwEmpty)
            | Some(Tok::LParen) => false,
            _ => true,
        }
    }

    fn term(&mut self) -> Result<DiagramAst, DslError> {
        let mut acc = self.factor()?;
        while matches!(self.peek().map(|s| &s.tok), Some(Tok::Star)) {
            self.bump();
            let rhs = self.factor()?;
            acc = DiagramAst::par(acc, rhs);
        }
        Ok(acc)
    }

    fn sort_ref(&mut self) -> Result<String, DslError> {
        let (name, line, col) = self.expect_ident("sort name")?;
        if !self.sig.has_sort(&name) {
            return Err(DslError::Unknown { line, col, name });
        }
        Ok(name)
    }

    fn factor(&mut self) -> Result<DiagramAst, DslError> {
        let (line, col) = self.here();
        match self.bump().map(|s| s.tok) {
            Some(Tok::Ident(name)) => {
                if self.sig.generator(&name).is_some() {
                    Ok(DiagramAst::Gen(name))
                } else {
                    Err(DslError::Unknown { line, col, name })
                }
            }
            Some(Tok::KwId) => {
                self.expect(Tok::LBracket, "'['")?;
                let sort = self.sort_ref()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(DiagramAst::Id(sort))
            }
            Some(Tok::KwSwap) => {
                self.expect(Tok::LBracket, "'['")?;
                let a = self.sort_ref()?;
                self.expect(Tok::Comma, "','")?;
                let b = self.sort_ref()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(DiagramAst::Swap(a, b))
            }
            Some(Tok::KwCopy) => {
                self.expect(Tok::LBracket, "'['")?;
                let sort = self.sort_ref()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(DiagramAst::Copy(sort))
            }
            Some(Tok::KwDiscard) => {
                self.expect(Tok::LBracket, "'['")?;
                let sort = self.sort_ref()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(DiagramAst::Discard(sort))
            }
            Some(Tok::KwEmpty) => Ok(DiagramAst::Empty),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(other) => Err(DslError::Parse {
                line,
                col,
                msg: format!("expected a diagram factor, found {other:?}"),
            }),
            None => Err(DslError::Parse { line, col, msg: "expected a diagram factor".into() }),
        }
    }
}

// ---------------------------------------------------------------------------
// Typechecker
// ---------------------------------------------------------------------------

/// Computes the input and output words of a diagram, or reports the offending
/// sequential composition with both words.
pub fn typecheck(ast: &DiagramAst, sig: &Signature) -> Result<TypedDiagram, DslError> {
    let (input, output) = infer(ast, sig)?;
    Ok(TypedDiagram { ast: ast.clone(), input, output })
}

fn infer(ast: &DiagramAst, sig: &Signature) -> Result<(Word, Word), DslError> {
    match ast {
        DiagramAst::Gen(name) => {
            let decl = sig.generator(name).ok_or_else(|| DslError::UnknownGenerator(name.clone()))?;
            Ok((decl.arity.clone(), decl.coarity.clone()))
        }
        DiagramAst::Empty => Ok((Vec::new(), Vec::new())),
        DiagramAst::Id(a) => {
            require_sort(sig, a)?;
            Ok((vec![a.clone()], vec![a.clone()]))
        }
        DiagramAst::Swap(a, b) => {
            require_sort(sig, a)?;
            require_sort(sig, b)?;
            Ok((vec![a.clone(), b.clone()], vec![b.clone(), a.clone()]))
        }
        DiagramAst::Copy(a) => {
            require_sort(sig, a)?;
            Ok((vec![a.clone()], vec![a.clone(), a.clone()]))
        }
        DiagramAst::Discard(a) => {
            require_sort(sig, a)?;
            Ok((vec![a.clone()], Vec::new()))
        }
        DiagramAst::Seq(first, second) => {
            let (in1, out1) = infer(first, sig)?;
            let (in2, out2) = infer(second, sig)?;
            if out1 != in2 {
                return Err(DslError::WordMismatch {
                    left: word_to_string(&out1),
                    right: word_to_string(&in2),
                });
            }
            Ok((in1, out2))
        }
        DiagramAst::Par(top, bottom) => {
            let (mut in1, mut out1) = infer(top, sig)?;
            let (in2, out2) = infer(bottom, sig)?;
            in1.extend(in2);
            out1.extend(out2);
            Ok((in1, out1))
        }
    }
}

fn require_sort(sig: &Signature, name: &str) -> Result<(), DslError> {
    if sig.has_sort(name) {
        Ok(())
    } else {
        Err(DslError::UnknownSort(name.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

/// Prints a diagram back to concrete syntax; reparsing yields a structurally
/// identical AST.
pub fn print_ast(ast: &DiagramAst) -> String {
    print_prec(ast, 0)
}

// prec 0 = pipeline position, 1 = parallel position, 2 = factor position
fn print_prec(ast: &DiagramAst, prec: u8) -> String {
    match ast {
        DiagramAst::Gen(name) => name.clone(),
        DiagramAst::Empty => "empty".to_string(),
        DiagramAst::Id(a) => format!("id[{a}]"),
        DiagramAst::Swap(a, b) => format!("swap[{a},{b}]"),
        DiagramAst::Copy(a) => format!("copy[{a}]"),
        DiagramAst::Discard(a) => format!("discard[{a}]"),
        DiagramAst::Seq(a, b) => {
            // Left operand may continue a pipeline; the right operand is
            // parenthesized when it is itself a Seq so structure survives.
            let s = format!("{} ; {}", print_prec(a, 0), print_prec(b, 1));
            if prec > 0 {
                format!("({s})")
            } else {
                s
            }
        }
        DiagramAst::Par(a, b) => {
            let s = format!("{} * {}", print_prec(a, 1), print_prec(b, 2));
            if prec > 1 {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

/// Prints a full program: declarations for the signature plus one named
/// diagram.
pub fn print_program(sig: &Signature, diagrams: &BTreeMap<String, DiagramAst>) -> String {
    let mut out = String::new();
    for sort in sig.sorts() {
        out.push_str(&format!("sort {sort};\n"));
    }
    for (name, decl) in sig.generators() {
        out.push_str(&format!(
            "gen {name} : {} -> {}",
            word_to_string(&decl.arity),
            word_to_string(&decl.coarity)
        ));
        if let Some(c) = decl.default_complexity {
            out.push_str(&format!(" @{c}"));
        }
        out.push_str(";\n");
    }
    for (name, ast) in diagrams {
        out.push_str(&format!("diagram {name} = {};\n", print_ast(ast)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_seq_of_generators() {
        let (sig, diagrams) = parse("sort A; gen f : A -> A @2; diagram d = f ; f;").unwrap();
        assert!(sig.has_sort("A"));
        assert_eq!(sig.generator("f").unwrap().default_complexity, Some(2.0));
        assert_eq!(
            diagrams["d"],
            DiagramAst::seq(DiagramAst::Gen("f".into()), DiagramAst::Gen("f".into()))
        );
    }

    #[test]
    fn parses_par_of_structural_maps() {
        let (_, diagrams) =
            parse("sort A; sort B; diagram d = id[A] * swap[A,B];").unwrap();
        assert_eq!(
            diagrams["d"],
            DiagramAst::par(DiagramAst::Id("A".into()), DiagramAst::Swap("A".into(), "B".into()))
        );
    }

    #[test]
    fn unknown_generator_is_reported_with_position() {
        let err = parse("sort A; gen f : A -> A; diagram d = f ; g;").unwrap_err();
        match err {
            DslError::Unknown { name, line, col } => {
                assert_eq!(name, "g");
                assert_eq!(line, 1);
                assert!(col > 0);
            }
            other => panic!("expected unknown identifier, got {other}"),
        }
    }

    #[test]
    fn duplicate_declaration_is_an_error() {
        assert!(matches!(parse("sort A; sort A;"), Err(DslError::Duplicate { .. })));
        assert!(matches!(
            parse("sort A; gen f : A -> A; gen f : A -> A;"),
            Err(DslError::Duplicate { .. })
        ));
    }

    #[test]
    fn typechecks_composition_and_reports_mismatch() {
        let (sig, diagrams) = parse(
            "sort A; sort B; sort C; gen f : A -> B; gen g : B -> C; diagram ok = f ; g;",
        )
        .unwrap();
        let typed = typecheck(&diagrams["ok"], &sig).unwrap();
        assert_eq!(typed.input, vec!["A".to_string()]);
        assert_eq!(typed.output, vec!["C".to_string()]);

        let (sig2, d2) = parse(
            "sort A; sort B; sort C; gen f : A -> B; gen g : A -> C; diagram bad = f ; g;",
        )
        .unwrap();
        match typecheck(&d2["bad"], &sig2) {
            Err(DslError::WordMismatch { left, right }) => {
                assert_eq!(left, "B");
                assert_eq!(right, "A");
            }
            other => panic!("expected word mismatch, got {other:?}"),
        }
    }

    #[test]
    fn par_concatenates_words() {
        let (sig, diagrams) = parse(
            "sort A; sort B; sort C; sort D; gen f : A -> B; gen g : C -> D; diagram d = f * g;",
        )
        .unwrap();
        let typed = typecheck(&diagrams["d"], &sig).unwrap();
        assert_eq!(typed.input, vec!["A".to_string(), "C".to_string()]);
        assert_eq!(typed.output, vec!["B".to_string(), "D".to_string()]);
    }

    #[test]
    fn empty_word_parses_as_one() {
        let (sig, _) = parse("sort A; gen point : 1 -> A;").unwrap();
        assert!(sig.generator("point").unwrap().arity.is_empty());
    }

    #[test]
    fn print_parse_round_trip_preserves_structure() {
        let src = "sort A; sort B; gen f : A -> B @1.5; gen g : B -> A; \
                   diagram d = (f ; g) * id[A] ; (id[A] * copy[A]) ; (discard[A] * id[A] * id[A]);";
        let (sig, diagrams) = parse(src).unwrap();
        let printed = print_program(&sig, &diagrams);
        let (_, reparsed) = parse(&printed).unwrap();
        assert_eq!(diagrams, reparsed);
    }

    #[test]
    fn right_nested_seq_survives_round_trip() {
        let ast = DiagramAst::seq(
            DiagramAst::Gen("f".into()),
            DiagramAst::seq(DiagramAst::Gen("f".into()), DiagramAst::Gen("f".into())),
        );
        let src = format!("sort A; gen f : A -> A; diagram d = {};", print_ast(&ast));
        let (_, reparsed) = parse(&src).unwrap();
        assert_eq!(reparsed["d"], ast);
    }
}
