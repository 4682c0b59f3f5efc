//! Schema catalog access: table names, root pages, and ordered column
//! names parsed out of the stored CREATE TABLE text.

use super::btree::walk_btree;
use super::record::TypedValue;
use super::{Database, SqliteError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableInfo {
    pub name: String,
    pub root_page: u32,
    pub columns: Vec<String>,
    /// Index of the column declared INTEGER PRIMARY KEY, stored as NULL in
    /// records and aliased to the rowid.
    pub rowid_alias: Option<usize>,
}

impl TableInfo {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
    }
}

/// Read the schema table (root page 1) and return every ordinary rowid
/// table. Index entries, views, triggers, virtual tables and WITHOUT ROWID
/// tables are skipped.
pub fn read_schema(db: &Database) -> Result<Vec<TableInfo>, SqliteError> {
    let rows = walk_btree(db, 1, "sqlite_master")?;
    let mut tables = Vec::new();
    for row in rows {
        let get_text = |i: usize| row.columns.get(i).and_then(|v| v.as_text());
        if get_text(0) != Some("table") {
            continue;
        }
        let name = match get_text(1) {
            Some(n) => n.to_string(),
            None => continue,
        };
        let root_page = match row.columns.get(3) {
            Some(TypedValue::Int(p)) if *p > 0 => *p as u32,
            _ => continue, // virtual tables have no root page
        };
        let sql = get_text(4).unwrap_or("");
        if sql.to_ascii_uppercase().contains("WITHOUT ROWID") {
            continue;
        }
        let (columns, rowid_alias) = parse_create_table(sql);
        tables.push(TableInfo {
            name,
            root_page,
            columns,
            rowid_alias,
        });
    }
    Ok(tables)
}

/// Extract ordered column names (and the INTEGER PRIMARY KEY position, if
/// any) from CREATE TABLE text. Table-level constraints are ignored.
pub fn parse_create_table(sql: &str) -> (Vec<String>, Option<usize>) {
    let open = match sql.find('(') {
        Some(i) => i,
        None => return (Vec::new(), None),
    };
    let body = match matching_paren(&sql[open..]) {
        Some(end) => &sql[open + 1..open + end],
        None => return (Vec::new(), None),
    };
    let mut columns = Vec::new();
    let mut rowid_alias = None;
    for def in split_top_level(body) {
        let def = def.trim();
        if def.is_empty() {
            continue;
        }
        let (first, rest) = first_token(def);
        let upper = first.to_ascii_uppercase();
        if matches!(
            upper.as_str(),
            "PRIMARY" | "UNIQUE" | "CHECK" | "FOREIGN" | "CONSTRAINT"
        ) {
            continue;
        }
        let name = unquote(first);
        if rest.to_ascii_uppercase().contains("INTEGER PRIMARY KEY")
            || def.to_ascii_uppercase().contains("INTEGER PRIMARY KEY")
        {
            rowid_alias = Some(columns.len());
        }
        columns.push(name);
    }
    (columns, rowid_alias)
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        if let Some(q) = in_quote {
            if c == q {
                in_quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' | '`' => in_quote = Some(c),
            '[' => in_quote = Some(']'),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut in_quote: Option<char> = None;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        if let Some(q) = in_quote {
            if c == q {
                in_quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' | '`' => in_quote = Some(c),
            '[' => in_quote = Some(']'),
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn first_token(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    if let Some(q) = s.chars().next().filter(|c| matches!(c, '"' | '\'' | '`' | '[')) {
        let close = if q == '[' { ']' } else { q };
        if let Some(end) = s[1..].find(close) {
            return (&s[..end + 2], &s[end + 2..]);
        }
    }
    match s.find(|c: char| c.is_whitespace() || c == '(') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    }
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    let bytes = s.as_bytes();
    if bytes.len() >= 2 {
        let (a, b) = (bytes[0] as char, bytes[bytes.len() - 1] as char);
        if (a == '"' && b == '"')
            || (a == '\'' && b == '\'')
            || (a == '`' && b == '`')
            || (a == '[' && b == ']')
        {
            return s[1..s.len() - 1].to_string();
        }
    }
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_columns() {
        let (cols, ipk) = parse_create_table(
            "CREATE TABLE moz_cookies (id INTEGER PRIMARY KEY, name TEXT, value TEXT, host TEXT)",
        );
        assert_eq!(cols, vec!["id", "name", "value", "host"]);
        assert_eq!(ipk, Some(0));
    }

    #[test]
    fn table_constraints_skipped() {
        let (cols, ipk) = parse_create_table(
            "CREATE TABLE t (a INTEGER, b TEXT NOT NULL, PRIMARY KEY (a, b), UNIQUE(b), CHECK (a > 0))",
        );
        assert_eq!(cols, vec!["a", "b"]);
        assert_eq!(ipk, None);
    }

    #[test]
    fn quoted_names_and_defaults_with_commas() {
        let (cols, _) = parse_create_table(
            "CREATE TABLE \"odd table\" ([first col] TEXT DEFAULT 'a,b', `second` INTEGER, \"third\" BLOB)",
        );
        assert_eq!(cols, vec!["first col", "second", "third"]);
    }

    #[test]
    fn no_parens() {
        assert_eq!(parse_create_table("CREATE TABLE broken"), (vec![], None));
    }
}
