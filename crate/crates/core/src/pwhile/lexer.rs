use num_bigint::BigInt;

use super::ast::Side;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `x#1`, `x#2`
    Tagged(String, Side),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest first, so that prefixes never shadow longer operators.
const SYMBOLS: &[(&str, &str)] = &[
    ("==>", "==>"),
    ("<=>", "<=>"),
    (":=", ":="),
    ("~~", "~~"),
    ("++", "++"),
    ("--", "--"),
    ("::", "::"),
    ("==", "="),
    ("!=", "!="),
    ("<>", "!="),
    ("<=", "<="),
    (">=", ">="),
    ("&&", "&&"),
    ("||", "||"),
    ("/\\", "&&"),
    ("\\/", "||"),
    ("=", "="),
    ("<", "<"),
    (">", ">"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("/", "/"),
    ("%", "mod"),
    ("!", "!"),
    ("?", "?"),
    (":", ":"),
    (",", ","),
    (";", ";"),
    (".", "."),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    ("{", "{"),
    ("}", "}"),
    ("|", "|"),
    ("∧", "&&"),
    ("∨", "||"),
    ("¬", "!"),
    ("⇒", "==>"),
    ("→", "==>"),
    ("⟺", "<=>"),
    ("⇔", "<=>"),
    ("≥", ">="),
    ("≤", "<="),
    ("≠", "!="),
    ("×", "*"),
    ("←", ":="),
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        }
        // Comments: `// ...` and `(* ... *)`.
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            advance(&mut i, &mut line, &mut col, 2, &chars);
            loop {
                if i + 1 >= chars.len() {
                    return Err(ParseError::syntax(l0, c0, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == ')' {
                    advance(&mut i, &mut line, &mut col, 2, &chars);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Int(text.parse().expect("digits")),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            let name: String = chars[start..i].iter().collect();
            if chars.get(i) == Some(&'#') {
                let side = match chars.get(i + 1) {
                    Some('1') => Side::Left,
                    Some('2') => Side::Right,
                    _ => return Err(ParseError::syntax(line, col, "expected 1 or 2 after '#'")),
                };
                advance(&mut i, &mut line, &mut col, 2, &chars);
                out.push(Token {
                    tok: Tok::Tagged(name, side),
                    line: tl,
                    col: tc,
                });
            } else {
                out.push(Token {
                    tok: Tok::Ident(name),
                    line: tl,
                    col: tc,
                });
            }
            continue;
        }
        let matched = SYMBOLS.iter().find(|(text, _)| {
            let n = text.chars().count();
            i + n <= chars.len() && chars[i..i + n].iter().copied().eq(text.chars())
        });
        match matched {
            Some((text, canon)) => {
                advance(&mut i, &mut line, &mut col, text.chars().count(), &chars);
                out.push(Token {
                    tok: Tok::Sym(canon),
                    line: tl,
                    col: tc,
                });
            }
            None => {
                return Err(ParseError::syntax(
                    tl,
                    tc,
                    &format!("unexpected character {c:?}"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
