//! Reader and writer for the word2vec binary and text formats.
//!
//! Both formats start with an ASCII header `<vocab_size> <dim>\n`. The binary
//! body stores each word as UTF-8 bytes terminated by a single space, followed
//! by `dim` little-endian f32 values and an optional newline. The text body
//! stores one `<word> <f1> ... <fdim>` line per word.

use std::io::{self, BufRead, Read, Write};

use super::{ModelError, ModelFormat};

/// Longest word (in bytes) accepted by the binary reader.
pub const MAX_WORD_BYTES: usize = 1000;

const MAX_HEADER_BYTES: u64 = 256;
const SNIFF_BYTES: usize = 64 * 1024;
// Caps the up-front allocation driven by an untrusted header.
const MAX_PREALLOC_ROWS: usize = 1 << 16;

/// Raw rows as they appear in the file, before normalization.
#[derive(Debug)]
pub(crate) struct RawRows {
    pub dim: usize,
    pub words: Vec<String>,
    pub vectors: Vec<f32>,
}

/// Parses the `<vocab_size> <dim>` header line.
pub fn read_header<R: BufRead>(reader: &mut R) -> Result<(usize, usize), ModelError> {
    let mut line = Vec::new();
    reader.take(MAX_HEADER_BYTES).read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(ModelError::MalformedHeader(preview(&line)));
    }
    let text = std::str::from_utf8(&line).map_err(|_| ModelError::MalformedHeader(preview(&line)))?;
    let mut fields = text.split_ascii_whitespace();
    let parsed = match (fields.next(), fields.next(), fields.next()) {
        (Some(count), Some(dim), None) => count.parse::<usize>().ok().zip(dim.parse::<usize>().ok()),
        _ => None,
    };
    match parsed {
        Some((count, dim)) if count > 0 && dim > 0 => Ok((count, dim)),
        _ => Err(ModelError::MalformedHeader(preview(&line))),
    }
}

fn preview(line: &[u8]) -> String {
    let text = String::from_utf8_lossy(line);
    text.trim_end().chars().take(64).collect()
}

pub(crate) fn read_rows<R: BufRead>(mut reader: R, format: ModelFormat) -> Result<RawRows, ModelError> {
    let (count, dim) = read_header(&mut reader)?;
    let format = match format {
        ModelFormat::Auto => sniff_body(&mut reader)?,
        other => other,
    };
    let mut rows = RawRows {
        dim,
        words: Vec::with_capacity(count.min(MAX_PREALLOC_ROWS)),
        vectors: Vec::with_capacity(count.min(MAX_PREALLOC_ROWS).saturating_mul(dim)),
    };
    match format {
        ModelFormat::Binary => read_binary_body(&mut reader, count, &mut rows)?,
        _ => read_text_body(&mut reader, count, &mut rows)?,
    }
    Ok(rows)
}

/// Decides between binary and text by inspecting the first bytes after the
/// header: a text body is valid UTF-8 without control characters other than
/// whitespace.
fn sniff_body<R: BufRead>(reader: &mut R) -> io::Result<ModelFormat> {
    let sample = reader.fill_buf()?;
    let sample = &sample[..sample.len().min(SNIFF_BYTES)];
    let valid = match std::str::from_utf8(sample) {
        Ok(s) => s,
        // A multi-byte character cut off at the end of the sample is fine.
        Err(e) if e.error_len().is_none() => std::str::from_utf8(&sample[..e.valid_up_to()]).unwrap_or(""),
        Err(_) => return Ok(ModelFormat::Binary),
    };
    let textual = valid.chars().all(|c| !c.is_control() || matches!(c, '\n' | '\r' | '\t'));
    Ok(if textual { ModelFormat::Text } else { ModelFormat::Binary })
}

fn truncated(count: usize, rows: &RawRows) -> ModelError {
    ModelError::TruncatedFile { expected: count, read: rows.words.len() }
}

fn read_binary_body<R: BufRead>(reader: &mut R, count: usize, rows: &mut RawRows) -> Result<(), ModelError> {
    let mut word = Vec::with_capacity(64);
    let mut floats = vec![0u8; rows.dim * 4];
    for row in 0..count {
        word.clear();
        reader.by_ref().take(MAX_WORD_BYTES as u64 + 1).read_until(b' ', &mut word)?;
        if word.last() != Some(&b' ') {
            if word.len() > MAX_WORD_BYTES {
                return Err(ModelError::InvalidWord { row, reason: format!("longer than {MAX_WORD_BYTES} bytes") });
            }
            return Err(truncated(count, rows));
        }
        word.pop();
        if word.is_empty() {
            return Err(ModelError::InvalidWord { row, reason: "empty word".into() });
        }
        let text = std::str::from_utf8(&word)
            .map_err(|_| ModelError::InvalidWord { row, reason: "not valid UTF-8".into() })?;
        match reader.read_exact(&mut floats) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Err(truncated(count, rows)),
            Err(e) => return Err(e.into()),
        }
        rows.words.push(text.to_owned());
        rows.vectors.extend(floats.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
        if reader.fill_buf()?.first() == Some(&b'\n') {
            reader.consume(1);
        }
    }
    Ok(())
}

fn read_text_body<R: BufRead>(reader: &mut R, count: usize, rows: &mut RawRows) -> Result<(), ModelError> {
    let mut line = String::new();
    for row in 0..count {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(truncated(count, rows));
        }
        let mut fields = line.split_ascii_whitespace();
        let word = fields.next().ok_or_else(|| ModelError::MalformedRow { row, reason: "blank line".into() })?;
        let start = rows.vectors.len();
        for field in fields {
            let value = field
                .parse::<f32>()
                .map_err(|_| ModelError::MalformedRow { row, reason: format!("bad float `{field}`") })?;
            rows.vectors.push(value);
        }
        let found = rows.vectors.len() - start;
        if found != rows.dim {
            return Err(ModelError::DimensionMismatch { expected: rows.dim, found });
        }
        rows.words.push(word.to_owned());
    }
    Ok(())
}

fn check_shape<S: AsRef<str>>(words: &[S], vectors: &[f32], dim: usize) -> io::Result<()> {
    if dim == 0 || vectors.len() != words.len() * dim {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} words do not match {} values at dim {dim}", words.len(), vectors.len()),
        ));
    }
    Ok(())
}

/// Writes rows in word2vec binary format. `vectors` is row-major, `dim` values per word.
pub fn write_binary<W: Write, S: AsRef<str>>(mut w: W, words: &[S], vectors: &[f32], dim: usize) -> io::Result<()> {
    check_shape(words, vectors, dim)?;
    writeln!(w, "{} {}", words.len(), dim)?;
    for (word, row) in words.iter().zip(vectors.chunks_exact(dim)) {
        w.write_all(word.as_ref().as_bytes())?;
        w.write_all(b" ")?;
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes rows in word2vec text format using shortest round-trip float formatting.
pub fn write_text<W: Write, S: AsRef<str>>(mut w: W, words: &[S], vectors: &[f32], dim: usize) -> io::Result<()> {
    check_shape(words, vectors, dim)?;
    writeln!(w, "{} {}", words.len(), dim)?;
    for (word, row) in words.iter().zip(vectors.chunks_exact(dim)) {
        w.write_all(word.as_ref().as_bytes())?;
        for v in row {
            write!(w, " {v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(bytes: &[u8], format: ModelFormat) -> Result<RawRows, ModelError> {
        read_rows(bytes, format)
    }

    #[test]
    fn header_requires_two_positive_integers() {
        for bad in ["abc def\n", "3\n", "3 4 5\n", "0 3\n", "3 0\n", "-1 3\n", "3 4"] {
            let err = read_header(&mut bad.as_bytes()).unwrap_err();
            assert!(matches!(err, ModelError::MalformedHeader(_)), "{bad:?}: {err}");
        }
        assert_eq!(read_header(&mut "3000000 300\n".as_bytes()).unwrap(), (3_000_000, 300));
        assert_eq!(read_header(&mut "2 3\r\n".as_bytes()).unwrap(), (2, 3));
    }

    #[test]
    fn empty_input_is_malformed_header() {
        assert!(matches!(rows(b"", ModelFormat::Auto), Err(ModelError::MalformedHeader(_))));
    }

    #[test]
    fn binary_newline_after_vector_is_optional() {
        let mut with = b"2 1\na ".to_vec();
        with.extend(1f32.to_le_bytes());
        with.extend(b"\nb ");
        with.extend(2f32.to_le_bytes());
        let parsed = rows(&with, ModelFormat::Binary).unwrap();
        assert_eq!(parsed.words, ["a", "b"]);
        assert_eq!(parsed.vectors, [1.0, 2.0]);

        let mut without = b"2 1\na ".to_vec();
        without.extend(1f32.to_le_bytes());
        without.extend(b"b ");
        without.extend(2f32.to_le_bytes());
        assert_eq!(rows(&without, ModelFormat::Binary).unwrap().words, ["a", "b"]);
    }

    #[test]
    fn binary_rejects_overlong_and_empty_words() {
        let mut long = b"1 1\n".to_vec();
        long.extend(std::iter::repeat_n(b'x', MAX_WORD_BYTES + 1));
        long.push(b' ');
        long.extend(1f32.to_le_bytes());
        assert!(matches!(rows(&long, ModelFormat::Binary), Err(ModelError::InvalidWord { row: 0, .. })));

        let mut exact = b"1 1\n".to_vec();
        exact.extend(std::iter::repeat_n(b'x', MAX_WORD_BYTES));
        exact.push(b' ');
        exact.extend(1f32.to_le_bytes());
        assert_eq!(rows(&exact, ModelFormat::Binary).unwrap().words[0].len(), MAX_WORD_BYTES);

        let mut empty = b"1 1\n ".to_vec();
        empty.extend(1f32.to_le_bytes());
        assert!(matches!(rows(&empty, ModelFormat::Binary), Err(ModelError::InvalidWord { .. })));
    }

    #[test]
    fn binary_truncation_is_reported() {
        let mut bytes = b"2 2\na ".to_vec();
        bytes.extend(1f32.to_le_bytes());
        bytes.extend(1f32.to_le_bytes());
        bytes.extend(b"\nb ");
        bytes.extend(1f32.to_le_bytes());
        let err = rows(&bytes, ModelFormat::Binary).unwrap_err();
        assert!(matches!(err, ModelError::TruncatedFile { expected: 2, read: 1 }), "{err}");
    }

    #[test]
    fn text_rows_are_checked_against_dim() {
        let err = rows(b"1 3\nhi 1 2\n", ModelFormat::Text).unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { expected: 3, found: 2 }));
        let err = rows(b"2 2\nhi 1 2\n", ModelFormat::Text).unwrap_err();
        assert!(matches!(err, ModelError::TruncatedFile { expected: 2, read: 1 }));
        let err = rows(b"1 2\nhi 1 x\n", ModelFormat::Text).unwrap_err();
        assert!(matches!(err, ModelError::MalformedRow { row: 0, .. }));
    }

    #[test]
    fn text_accepts_trailing_space_and_crlf() {
        let parsed = rows(b"2 2\nhi 1 2 \r\nyo -0.5 3e-2\n", ModelFormat::Text).unwrap();
        assert_eq!(parsed.words, ["hi", "yo"]);
        assert_eq!(parsed.vectors, [1.0, 2.0, -0.5, 0.03]);
    }

    #[test]
    fn auto_detects_both_formats() {
        let text = b"1 2\nhi 1 2\n";
        let mut buf = text.as_slice();
        read_header(&mut buf).unwrap();
        assert_eq!(sniff_body(&mut buf).unwrap(), ModelFormat::Text);

        let mut binary = b"1 2\nhi ".to_vec();
        binary.extend(1f32.to_le_bytes());
        binary.extend(0f32.to_le_bytes());
        let mut buf = binary.as_slice();
        read_header(&mut buf).unwrap();
        assert_eq!(sniff_body(&mut buf).unwrap(), ModelFormat::Binary);
    }

    #[test]
    fn writers_reject_ragged_input() {
        let mut out = Vec::new();
        assert!(write_binary(&mut out, &["a", "b"], &[1.0, 2.0, 3.0], 2).is_err());
        assert!(write_text(&mut out, &["a"], &[1.0], 0).is_err());
    }
}
