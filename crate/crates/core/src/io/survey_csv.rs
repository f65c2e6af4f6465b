use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::survey::ResponseRecord;

pub const SURVEY_COLUMNS: [&str; 5] = [
    "respondent_id",
    "plan_id",
    "attribute_id",
    "max_cost",
    "utilization",
];
pub const LIFESPAN_COLUMN: &str = "lifespan";

fn parse_error(row: u64, column: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        reason: reason.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line()).unwrap_or(0);
    parse_error(row, "", e.to_string())
}

fn number(row: u64, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| parse_error(row, column, format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(row, column, format!("`{raw}` is not finite")));
    }
    Ok(v)
}

/// Parses survey responses; rows are numbered by file line, the header
/// being line 1.
pub fn parse_survey_csv<R: Read>(input: R) -> Result<Vec<ResponseRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Fields)
        .from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.is_empty() || names == [""] {
        return Err(parse_error(1, "", "missing header"));
    }
    let with_lifespan = match names.len() {
        5 => false,
        6 if names[5] == LIFESPAN_COLUMN => true,
        _ => {
            return Err(parse_error(
                1,
                "",
                format!(
                    "header must be `{}[,{LIFESPAN_COLUMN}]`, got `{}`",
                    SURVEY_COLUMNS.join(","),
                    names.join(",")
                ),
            ))
        }
    };
    if let Some((want, got)) = SURVEY_COLUMNS.iter().zip(&names).find(|(w, g)| w != g) {
        return Err(parse_error(1, got, format!("expected column `{want}`")));
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != names.len() {
            return Err(parse_error(
                line,
                "",
                format!("expected {} fields, found {}", names.len(), row.len()),
            ));
        }
        let text = |i: usize| -> Result<String> {
            let v = &row[i];
            if v.is_empty() {
                return Err(parse_error(line, SURVEY_COLUMNS[i], "empty value"));
            }
            Ok(v.to_string())
        };
        let mut record = ResponseRecord::new(
            text(0)?,
            text(1)?,
            text(2)?,
            number(line, SURVEY_COLUMNS[3], &row[3])?,
            number(line, SURVEY_COLUMNS[4], &row[4])?,
        );
        if with_lifespan && !row[5].is_empty() {
            record.lifespan = Some(number(line, LIFESPAN_COLUMN, &row[5])?);
        }
        record.line = Some(line);
        out.push(record);
    }
    Ok(out)
}

pub fn load_survey_csv(path: impl AsRef<Path>) -> Result<Vec<ResponseRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_survey_csv(file)
}

/// Writes records with the standard header; the lifespan column appears
/// when any record has one.
pub fn write_survey_csv<W: Write>(records: &[ResponseRecord], output: W) -> Result<()> {
    let with_lifespan = records.iter().any(|r| r.lifespan.is_some());
    let mut w = csv::Writer::from_writer(output);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = SURVEY_COLUMNS.to_vec();
    if with_lifespan {
        header.push(LIFESPAN_COLUMN);
    }
    w.write_record(&header).map_err(io)?;
    for r in records {
        let mut fields = vec![
            r.respondent_id.clone(),
            r.plan_id.clone(),
            r.attribute_id.clone(),
            r.max_cost.to_string(),
            r.utilization.to_string(),
        ];
        if with_lifespan {
            fields.push(r.lifespan.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&fields).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn survey_csv_string(records: &[ResponseRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_survey_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_rows() {
        let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,P,A,5,2.5\nr2,P,A,10,3\n";
        let recs = parse_survey_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].max_cost, 10.0);
        assert_eq!(recs[0].line, Some(2));
        assert_eq!(recs[1].lifespan, None);
    }

    #[test]
    fn bad_number_names_row_and_column() {
        let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,P,A,5,2.5\nr2,P,A,abc,3\n";
        match parse_survey_csv(csv.as_bytes()).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "max_cost");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lifespan_column() {
        let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization,lifespan\nr1,P,A,5,2.5,30\nr2,P,A,5,2.5,\n";
        let recs = parse_survey_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].lifespan, Some(30.0));
        assert_eq!(recs[1].lifespan, None);
    }

    #[test]
    fn header_must_match() {
        for csv in [
            "respondent,plan_id,attribute_id,max_cost,utilization\n",
            "respondent_id,plan_id,attribute_id,max_cost\n",
            "respondent_id,plan_id,attribute_id,max_cost,utilization,life\n",
            "",
        ] {
            match parse_survey_csv(csv.as_bytes()) {
                Err(Error::Parse { row: 1, .. }) => {}
                other => panic!("{csv:?}: {other:?}"),
            }
        }
        let header_only = "respondent_id,plan_id,attribute_id,max_cost,utilization\n";
        assert!(parse_survey_csv(header_only.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn ragged_and_empty_fields() {
        let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,P,A,5\n";
        assert!(matches!(parse_survey_csv(csv.as_bytes()), Err(Error::Parse { row: 2, .. })));
        let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,,A,5,2\n";
        match parse_survey_csv(csv.as_bytes()).unwrap_err() {
            Error::Parse { row: 2, column, .. } => assert_eq!(column, "plan_id"),
            other => panic!("{other:?}"),
        }
        let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,P,A,inf,2\n";
        assert!(matches!(parse_survey_csv(csv.as_bytes()), Err(Error::Parse { row: 2, .. })));
    }

    fn strip_lines(mut v: Vec<ResponseRecord>) -> Vec<ResponseRecord> {
        v.iter_mut().for_each(|r| r.line = None);
        v
    }

    proptest! {
        #[test]
        fn round_trip(rows in prop::collection::vec(
            ("[a-z0-9 ,\"]{1,8}", "[A-Za-z_]{1,6}", "[a-z]{1,6}", 0.0f64..35.0, 1.0f64..5.0, prop::option::of(0.0f64..40.0)),
            0..20,
        )) {
            let records: Vec<ResponseRecord> = rows
                .into_iter()
                .map(|(r, p, a, c, u, l)| {
                    let mut rec = ResponseRecord::new(r.trim(), p, a, c, u);
                    rec.lifespan = l;
                    rec
                })
                .filter(|r| !r.respondent_id.is_empty())
                .collect();
            let text = survey_csv_string(&records).unwrap();
            let back = strip_lines(parse_survey_csv(text.as_bytes()).unwrap());
            prop_assert_eq!(&back, &records);
            let again = survey_csv_string(&back).unwrap();
            prop_assert_eq!(again, text);
        }
    }
}
