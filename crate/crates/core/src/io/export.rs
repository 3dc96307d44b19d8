//! CSV exports and experiment report files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{ExperimentReport, NoiseTable};
use crate::features::FeatureScores;
use crate::nn::{ConfusionMatrix, TrainHistory};

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))?
        .flush()
        .map_err(|e| Error::Csv(e.into()))
}

/// Columns: rank, feature_name, feature_index, F_value.
pub fn write_ranking<W: Write>(out: W, scores: &FeatureScores) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "feature_name", "feature_index", "F_value"])?;
    for r in scores.ranking() {
        w.write_record([
            r.rank.to_string(),
            r.name,
            r.index.to_string(),
            r.f_value.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_history<W: Write>(out: W, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])?;
    for r in &history.records {
        w.write_record([
            r.epoch.to_string(),
            r.train_loss.to_string(),
            r.train_accuracy.to_string(),
            r.val_loss.to_string(),
            r.val_accuracy.to_string(),
        ])?;
    }
    finish(w)
}

/// Rows are true classes, columns predicted classes, both headed by class name.
pub fn write_confusion<W: Write>(
    out: W,
    cm: &ConfusionMatrix,
    class_names: &[String],
) -> Result<()> {
    if class_names.len() != cm.n_classes() {
        return Err(Error::Shape(format!(
            "{} class names for a {}-class confusion matrix",
            class_names.len(),
            cm.n_classes()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["true\\predicted".to_string()];
    header.extend(class_names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in class_names.iter().zip(&cm.counts) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// One row per model, one column per test noise level, as percentages in the header.
pub fn write_noise_table<W: Write>(out: W, table: &NoiseTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![format!(
        "model (trained at {}% noise)",
        table.train_noise.p() * 100.0
    )];
    header.extend(
        table
            .test_noises
            .iter()
            .map(|n| format!("{}%", n.p() * 100.0)),
    );
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![row.model.clone()];
        rec.extend(row.accuracies.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// Creates `path` and hands a buffered writer to `write`.
pub fn write_file(
    path: impl AsRef<Path>,
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write(&mut buf)?;
    buf.flush().map_err(|e| Error::io(path, e))
}

pub fn encode_report(report: &ExperimentReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        context: "report".into(),
        source,
    })?;
    text.push('\n');
    Ok(text)
}

/// Parses a report and checks it against its own confusion matrix.
pub fn decode_report(text: &str) -> Result<ExperimentReport> {
    let report: ExperimentReport = serde_json::from_str(text).map_err(|source| Error::Json {
        context: "report".into(),
        source,
    })?;
    if !report.is_consistent() {
        return Err(Error::Config(format!(
            "report for {} disagrees with its confusion matrix",
            report.model
        )));
    }
    Ok(report)
}

pub fn save_report(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_report(report)?).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_report(&text).map_err(|e| match e {
        Error::Json { source, .. } => Error::Json {
            context: path.display().to_string(),
            source,
        },
        other => other,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "text" | "txt" => Ok(ReportFormat::Text),
            _ => Err(Error::Config(format!(
                "unknown report format {s:?} (expected csv or text)"
            ))),
        }
    }
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"))
}

/// CSV: one row per class (accuracy, then confusion counts), then an `overall` row.
pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["class".to_string(), "accuracy".to_string()];
            header.extend(report.class_names.iter().map(|c| format!("predicted_{c}")));
            w.write_record(&header)?;
            for ((name, acc), row) in report
                .class_names
                .iter()
                .zip(&report.per_class_accuracy)
                .zip(&report.confusion.counts)
            {
                let mut rec = vec![
                    name.clone(),
                    acc.accuracy.map_or(String::new(), |a| a.to_string()),
                ];
                rec.extend(row.iter().map(u64::to_string));
                w.write_record(&rec)?;
            }
            let mut overall = vec!["overall".to_string(), report.accuracy.to_string()];
            overall.extend(std::iter::repeat_n(String::new(), report.class_names.len()));
            w.write_record(&overall)?;
            let bytes = w
                .into_inner()
                .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))?;
            String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
        }
        ReportFormat::Text => {
            let mut s = String::new();
            let d = &report.dataset;
            let seed = d
                .seed
                .map_or_else(|| "unknown".to_string(), |s| s.to_string());
            writeln!(s, "model: {}", report.model).ok();
            writeln!(
                s,
                "dataset: {} states, seed {seed}, noise {}",
                d.size, d.noise
            )
            .ok();
            writeln!(s, "accuracy: {:.4}", report.accuracy).ok();
            for c in &report.per_class_accuracy {
                writeln!(s, "  {:<8} {}", c.class, fmt_acc(c.accuracy)).ok();
            }
            writeln!(s, "confusion (rows true, columns predicted):").ok();
            let width = report
                .confusion
                .counts
                .iter()
                .flatten()
                .map(|c| c.to_string().len())
                .chain(report.class_names.iter().map(String::len))
                .max()
                .unwrap_or(1);
            write!(s, "  {:<8}", "").ok();
            for c in &report.class_names {
                write!(s, " {c:>width$}").ok();
            }
            writeln!(s).ok();
            for (c, row) in report.class_names.iter().zip(&report.confusion.counts) {
                write!(s, "  {c:<8}").ok();
                for v in row {
                    write!(s, " {v:>width$}").ok();
                }
                writeln!(s).ok();
            }
            writeln!(s, "runtime: {:.3} s", report.runtime_secs).ok();
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::experiments::{NoiseRow, NoiseSpec};
    use crate::features::FeatureOrdering;
    use crate::nn::EpochRecord;

    fn report() -> ExperimentReport {
        let cm = ConfusionMatrix::from_predictions(2, &[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        ExperimentReport::new("GME7", &Dataset::default(), &["Non-GME", "GME"], cm, 0.25)
    }

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn ranking_csv_columns() {
        let scores = FeatureScores {
            ordering: FeatureOrdering::Diag7,
            scores: vec![1.0, 5.0, 0.0, 2.0, 3.0, 3.0, 0.5],
        };
        let csv = text(|b| write_ranking(b, &scores));
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "rank,feature_name,feature_index,F_value");
        assert_eq!(lines[1], "1,Re(rho_11),1,5");
        assert_eq!(lines[2], "2,Re(rho_44),4,3");
        assert_eq!(lines.len(), 8);
    }

    #[test]
    fn history_and_confusion_csv() {
        let h = TrainHistory {
            records: vec![EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                train_accuracy: 0.75,
                val_loss: 0.25,
                val_accuracy: 1.0,
            }],
        };
        assert_eq!(
            text(|b| write_history(b, &h)),
            "epoch,train_loss,train_acc,val_loss,val_acc\n1,0.5,0.75,0.25,1\n"
        );
        let r = report();
        assert_eq!(
            text(|b| write_confusion(b, &r.confusion, &r.class_names)),
            "true\\predicted,Non-GME,GME\nNon-GME,1,1\nGME,0,2\n"
        );
        assert!(write_confusion(Vec::new(), &r.confusion, &["x".into()]).is_err());
    }

    #[test]
    fn noise_table_layout() {
        let t = NoiseTable {
            train_noise: NoiseSpec::new(0.02).unwrap(),
            test_noises: vec![NoiseSpec::none(), NoiseSpec::new(0.01).unwrap()],
            rows: vec![NoiseRow {
                model: "GME7".into(),
                accuracies: vec![0.5, 0.75],
            }],
        };
        assert_eq!(
            text(|b| write_noise_table(b, &t)),
            "model (trained at 2% noise),0%,1%\nGME7,0.5,0.75\n"
        );
    }

    #[test]
    fn report_round_trip_and_rendering() {
        let r = report();
        let back = decode_report(&encode_report(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let csv = render_report(&r, ReportFormat::Csv).unwrap();
        assert!(
            csv.starts_with("class,accuracy,predicted_Non-GME,predicted_GME\nNon-GME,0.5,1,1\n")
        );
        assert!(csv.ends_with("overall,0.75,,\n"));
        let txt = render_report(&r, "text".parse().unwrap()).unwrap();
        assert!(txt.contains("accuracy: 0.7500"));
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn inconsistent_reports_are_rejected() {
        let mut r = report();
        r.accuracy = 0.9;
        assert!(matches!(
            decode_report(&encode_report(&r).unwrap()),
            Err(Error::Config(_))
        ));
        assert!(decode_report("{\"model\": 1}").is_err());
    }
}
