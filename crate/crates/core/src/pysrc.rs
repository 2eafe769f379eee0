//! Small lexical helpers over Python source text.
//!
//! Nothing here is a parser. The scanner only knows enough about string
//! literals, comments and brackets to find top-level delimiters.

/// A character outside any string literal or comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sig {
    pub pos: usize,
    pub ch: char,
    /// Bracket depth the character sits at. Openers report the depth before
    /// they open, closers the depth after they close.
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanError {
    UnterminatedString,
    Unbalanced,
}

/// Scans `src`, skipping string literals and comments.
pub fn scan(src: &str) -> Result<Vec<Sig>, ScanError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut stack: Vec<char> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = src[i..].chars().next().expect("in bounds");
        match ch {
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            '\'' | '"' => {
                i = skip_string(src, i)?;
                continue;
            }
            '(' | '[' | '{' => {
                out.push(Sig {
                    pos: i,
                    ch,
                    depth: stack.len(),
                });
                stack.push(ch);
            }
            ')' | ']' | '}' => {
                let want = match ch {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if stack.pop() != Some(want) {
                    return Err(ScanError::Unbalanced);
                }
                out.push(Sig {
                    pos: i,
                    ch,
                    depth: stack.len(),
                });
            }
            _ => out.push(Sig {
                pos: i,
                ch,
                depth: stack.len(),
            }),
        }
        i += ch.len_utf8();
    }
    if !stack.is_empty() {
        return Err(ScanError::Unbalanced);
    }
    Ok(out)
}

/// Returns the index just past the string literal starting at `start`.
fn skip_string(src: &str, start: usize) -> Result<usize, ScanError> {
    let bytes = src.as_bytes();
    let q = bytes[start];
    let triple = bytes.len() >= start + 3 && bytes[start + 1] == q && bytes[start + 2] == q;
    let mut i = start + if triple { 3 } else { 1 };
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\\' {
            i += 2;
            continue;
        }
        if triple {
            if b == q && bytes.get(i + 1) == Some(&q) && bytes.get(i + 2) == Some(&q) {
                return Ok(i + 3);
            }
        } else if b == q {
            return Ok(i + 1);
        } else if b == b'\n' {
            return Err(ScanError::UnterminatedString);
        }
        i += 1;
    }
    Err(ScanError::UnterminatedString)
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => chars.all(is_ident_char),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    /// `def name(params) -> ret:` exactly as written, up to the colon.
    pub header: String,
    /// 0-based line where the `def` starts.
    pub start_line: usize,
    /// 0-based line holding the header's closing colon.
    pub end_line: usize,
}

/// Top-level (column 0) function definitions, in source order.
pub fn function_defs(src: &str) -> Vec<FunctionDef> {
    let mut defs = Vec::new();
    let mut offset = 0;
    let line_starts: Vec<usize> = std::iter::once(0)
        .chain(src.match_indices('\n').map(|(i, _)| i + 1))
        .collect();
    for (line_no, line) in src.split('\n').enumerate() {
        let rest = line
            .strip_prefix("async def ")
            .or_else(|| line.strip_prefix("def "));
        if let Some(rest) = rest {
            let name: String = rest.trim_start().chars().take_while(|c| is_ident_char(*c)).collect();
            if !name.is_empty() {
                if let Some(colon) = header_colon(&src[offset..]) {
                    let end = offset + colon;
                    let end_line = line_starts.partition_point(|&s| s <= end) - 1;
                    defs.push(FunctionDef {
                        name,
                        header: src[offset..=end].to_string(),
                        start_line: line_no,
                        end_line,
                    });
                }
            }
        }
        offset += line.len() + 1;
    }
    defs
}

/// Offset of the first depth-0 `:` after the parameter list opens.
fn header_colon(src: &str) -> Option<usize> {
    let mut seen_paren = false;
    let mut stack = 0usize;
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\'' | b'"' => {
                i = skip_string(src, i).ok()?;
                continue;
            }
            b'(' | b'[' | b'{' => {
                seen_paren = true;
                stack += 1;
            }
            b')' | b']' | b'}' => stack = stack.checked_sub(1)?,
            b':' if seen_paren && stack == 0 => return Some(i),
            b'\n' if !seen_paren => return None,
            _ => {}
        }
        i += 1;
    }
    None
}

/// Name of the function an `assert name(...)` / `assert not name(...)` calls.
pub fn asserted_callee(test: &str) -> Option<String> {
    let rest = test.trim_start().strip_prefix("assert")?;
    if !rest.starts_with(char::is_whitespace) && !rest.starts_with('(') {
        return None;
    }
    let mut rest = rest.trim_start();
    if let Some(r) = rest.strip_prefix("not") {
        if r.starts_with(char::is_whitespace) {
            rest = r.trim_start();
        }
    }
    let name: String = rest.chars().take_while(|c| is_ident_char(*c)).collect();
    let after = &rest[name.len()..];
    (is_identifier(&name) && after.trim_start().starts_with('(')).then_some(name)
}

pub fn is_import_line(line: &str) -> bool {
    let t = line.trim_end();
    t.starts_with("import ") || (t.starts_with("from ") && t.contains(" import "))
}

/// Contents of a docstring at the start of `body`, if any.
pub fn leading_docstring(body: &str) -> Option<String> {
    let t = body.trim_start();
    let t = t
        .strip_prefix('r')
        .or_else(|| t.strip_prefix('R'))
        .unwrap_or(t);
    for q in ["\"\"\"", "'''"] {
        if let Some(inner) = t.strip_prefix(q) {
            return inner.find(q).map(|end| inner[..end].to_string());
        }
    }
    for q in ['"', '\''] {
        if let Some(inner) = t.strip_prefix(q) {
            return inner.find(q).map(|end| inner[..end].to_string());
        }
    }
    None
}

/// Docstring cleanup with `inspect.cleandoc` semantics: the first line is
/// stripped, later lines lose their common indentation, and surrounding
/// blank lines are dropped.
pub fn dedent(doc: &str) -> String {
    let lines: Vec<&str> = doc.lines().collect();
    if lines.is_empty() {
        return String::new();
    }
    let indent = lines[1..]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut out: Vec<String> = Vec::with_capacity(lines.len());
    out.push(lines[0].trim().to_string());
    for l in &lines[1..] {
        if l.trim().is_empty() {
            out.push(String::new());
        } else {
            out.push(l[indent.min(l.len())..].trim_end().to_string());
        }
    }
    while out.first().is_some_and(|l| l.is_empty()) {
        out.remove(0);
    }
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out.join("\n")
}

/// Indents every non-blank line by `n` spaces.
pub fn indent(text: &str, n: usize) -> String {
    let pad = " ".repeat(n);
    text.lines()
        .map(|l| {
            if l.trim().is_empty() {
                String::new()
            } else {
                format!("{pad}{l}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
