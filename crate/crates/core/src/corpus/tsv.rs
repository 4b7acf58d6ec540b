//! Four-column dataset TSV.
//!
//! Layout: header line `id\tlabel\tdomain\ttext`, then one LF-terminated row
//! per example. Inside fields, backslash, tab, newline and carriage return
//! are written as `\\`, `\t`, `\n` and `\r`; any other escape is rejected so
//! that parsing followed by serialization reproduces the file exactly.

use std::collections::HashMap;

use super::{DatasetSplit, Example, Label, SplitName};
use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "id\tlabel\tdomain\ttext";

pub fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_text(field: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('\\') => out.push('\\'),
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(other) => return Err(format!("unknown escape \\{other}")),
                None => return Err("dangling backslash".into()),
            },
            '\r' => return Err("raw carriage return (CRLF line endings are not supported)".into()),
            c => out.push(c),
        }
    }
    Ok(out)
}

/// Parses a dataset body. Rows are numbered from 1, header excluded.
pub fn parse_dataset(body: &str, split: SplitName) -> Result<DatasetSplit> {
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or("");
    if header != DATASET_HEADER {
        return Err(Error::data(format!(
            "bad header {header:?}, expected {DATASET_HEADER:?}"
        )));
    }
    let mut rows: Vec<&str> = lines.collect();
    // A final LF leaves one empty trailing piece.
    if rows.last() == Some(&"") {
        rows.pop();
    }

    let mut examples = Vec::with_capacity(rows.len());
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(rows.len());
    for (i, line) in rows.iter().enumerate() {
        let row = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::data(format!(
                "row {row}: expected 4 tab-separated columns, found {}",
                fields.len()
            )));
        }
        let unescape =
            |f: &str| unescape_text(f).map_err(|msg| Error::data(format!("row {row}: {msg}")));
        let id = unescape(fields[0])?;
        if id.is_empty() {
            return Err(Error::data(format!("row {row}: empty id")));
        }
        let label: Label = fields[1]
            .parse()
            .map_err(|e| Error::data(format!("row {row}: {e}")))?;
        let domain = unescape(fields[2])?;
        let text = unescape(fields[3])?;
        if text.is_empty() {
            return Err(Error::data(format!("row {row}: empty text")));
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(Error::data(format!(
                "row {row}: duplicate id {id:?} (first seen on row {first})"
            )));
        }
        examples.push(Example {
            id,
            text,
            label,
            domain,
        });
    }
    if examples.is_empty() {
        return Err(Error::data("empty dataset"));
    }
    Ok(DatasetSplit::new(split, examples))
}

pub fn serialize_dataset(split: &DatasetSplit) -> String {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for e in &split.examples {
        out.push_str(&escape_text(&e.id));
        out.push('\t');
        out.push_str(e.label.as_str());
        out.push('\t');
        out.push_str(&escape_text(&e.domain));
        out.push('\t');
        out.push_str(&escape_text(&e.text));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn body(rows: &[&str]) -> String {
        let mut s = format!("{DATASET_HEADER}\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn two_rows_in_order() {
        let b = body(&["e1\thuman\tnews\tHello there", "e0\tgenerated\ttweets\tHi!"]);
        let split = parse_dataset(&b, SplitName::Train).unwrap();
        assert_eq!(split.len(), 2);
        assert_eq!(split.examples[0].id, "e1");
        assert_eq!(split.examples[1].label, Label::Generated);
        assert_eq!(split.domains.len(), 2);
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let err = parse_dataset(&body(&[]), SplitName::Train).unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn duplicate_id_names_id_and_row() {
        let mut rows: Vec<String> = (0..9)
            .map(|i| format!("x{i}\thuman\td\ttext {i}"))
            .collect();
        rows[2] = "e7\thuman\td\tfirst".into();
        rows[8] = "e7\tgenerated\td\tsecond".into();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let err = parse_dataset(&body(&refs), SplitName::Train)
            .unwrap_err()
            .to_string();
        assert!(err.contains("\"e7\""), "{err}");
        assert!(err.contains("row 9"), "{err}");
    }

    #[test]
    fn wrong_column_count() {
        let err = parse_dataset(&body(&["e1\thuman\tnews"]), SplitName::Train)
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 1") && err.contains("4"), "{err}");
    }

    #[test]
    fn unknown_label() {
        let err = parse_dataset(&body(&["e1\tbot\tnews\ttext"]), SplitName::Train)
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 1") && err.contains("bot"), "{err}");
    }

    #[test]
    fn escapes_decode() {
        let split =
            parse_dataset(&body(&["e1\thuman\tnews\ta\\tb\\nc\\\\d"]), SplitName::Test).unwrap();
        assert_eq!(split.examples[0].text, "a\tb\nc\\d");
    }

    #[test]
    fn bad_escape_rejected() {
        assert!(parse_dataset(&body(&["e1\thuman\tnews\ta\\qb"]), SplitName::Test).is_err());
        assert!(parse_dataset(&body(&["e1\thuman\tnews\tab\\"]), SplitName::Test).is_err());
    }

    #[test]
    fn crlf_rejected() {
        let b = format!("{DATASET_HEADER}\ne1\thuman\tnews\ttext\r\n");
        assert!(parse_dataset(&b, SplitName::Test).is_err());
    }

    #[test]
    fn bad_header() {
        assert!(parse_dataset("id\tlabel\ttext\n", SplitName::Train).is_err());
    }

    fn arb_row() -> impl Strategy<Value = (String, bool, String, String)> {
        (
            "[a-z0-9]{1,6}",
            any::<bool>(),
            "[a-z]{1,5}",
            "[ -~\t\n\r\\\\é日]{1,30}",
        )
            .prop_map(|(id, g, d, t)| (id, g, d, t))
    }

    proptest! {
        #[test]
        fn parse_then_serialize_is_identity(rows in prop::collection::vec(arb_row(), 1..20)) {
            let mut body = format!("{DATASET_HEADER}\n");
            let mut seen = std::collections::HashSet::new();
            for (i, (id, g, d, t)) in rows.iter().enumerate() {
                let id = format!("{id}{i}");
                prop_assume!(seen.insert(id.clone()));
                let label = if *g { "generated" } else { "human" };
                body.push_str(&format!("{}\t{label}\t{}\t{}\n", escape_text(&id), escape_text(d), escape_text(t)));
            }
            let split = parse_dataset(&body, SplitName::Train).unwrap();
            prop_assert_eq!(serialize_dataset(&split), body);
        }
    }
}
