//! Plain-text model and ensemble files.
//!
//! Model file:
//!
//! ```text
//! crimefis-model 1
//! variant anfis
//! consequent linear
//! dimensions 2
//! dimension latitude 2
//! 2.3721500000000002e1 2.3567020335018963e-2
//! 2.3832500000000000e1 2.3567020335018963e-2
//! dimension longitude 2
//! ...
//! rules 4
//! 0 0 : 0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
//! ```
//!
//! Every real is written with 17 significant digits, so a read-back model is
//! bit-identical to the one written.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experts::ExpertEnsemble;
use crate::fuzzy::{Consequent, GaussianMf, Rule, SugenoFis, Variant};

pub const MODEL_MAGIC: &str = "crimefis-model";
pub const ENSEMBLE_MAGIC: &str = "crimefis-ensemble";
pub const FORMAT_VERSION: u32 = 1;

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn model_to_string(fis: &SugenoFis) -> String {
    let mut out = String::new();
    out.push_str(&format!("{MODEL_MAGIC} {FORMAT_VERSION}\n"));
    out.push_str(&format!("variant {}\n", fis.variant()));
    let kind = if fis.has_linear_consequents() { "linear" } else { "constant" };
    out.push_str(&format!("consequent {kind}\n"));
    out.push_str(&format!("dimensions {}\n", fis.dims()));
    for (name, bank) in fis.dimension_names().iter().zip(fis.mf_banks()) {
        out.push_str(&format!("dimension {name} {}\n", bank.len()));
        for mf in bank {
            out.push_str(&format!("{} {}\n", format_real(mf.center()), format_real(mf.sigma())));
        }
    }
    out.push_str(&format!("rules {}\n", fis.rule_count()));
    for rule in fis.rules() {
        let idx: Vec<String> = rule.antecedent.iter().map(|i| i.to_string()).collect();
        let params: Vec<String> = match &rule.consequent {
            Consequent::Constant(v) => vec![format_real(*v)],
            Consequent::Linear { coefficients, bias } => coefficients
                .iter()
                .chain(std::iter::once(bias))
                .map(|v| format_real(*v))
                .collect(),
        };
        out.push_str(&format!("{} : {}\n", idx.join(" "), params.join(" ")));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok(l);
            }
        }
        self.line += 1;
        Err(self.err("unexpected end of file"))
    }

    /// Reads `keyword rest...` and returns `rest`.
    fn keyword(&mut self, keyword: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(char::is_whitespace) {
            Some((k, rest)) if k == keyword => Ok(rest.trim()),
            _ => Err(self.err(format!("expected '{keyword} ...', found '{l}'"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid {what} '{s}'")))
    }
}

pub fn model_from_str(text: &str) -> Result<SugenoFis> {
    let mut lines = Lines::new(text);
    let version: u32 = {
        let v = lines.keyword(MODEL_MAGIC)?;
        lines.parse(v, "format version")?
    };
    if version != FORMAT_VERSION {
        return Err(lines.err(format!("unsupported model format version {version}")));
    }
    let variant: Variant = lines
        .keyword("variant")?
        .parse()
        .map_err(|_| lines.err("unknown variant"))?;
    let linear = match lines.keyword("consequent")? {
        "linear" => true,
        "constant" => false,
        other => return Err(lines.err(format!("unknown consequent kind '{other}'"))),
    };
    let dims: usize = {
        let s = lines.keyword("dimensions")?;
        lines.parse(s, "dimension count")?
    };
    let mut names = Vec::with_capacity(dims);
    let mut banks = Vec::with_capacity(dims);
    for _ in 0..dims {
        let rest = lines.keyword("dimension")?;
        let (name, count) = rest
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| lines.err("expected 'dimension NAME COUNT'"))?;
        let count: usize = lines.parse(count, "MF count")?;
        let mut bank = Vec::with_capacity(count);
        for _ in 0..count {
            let l = lines.next_line()?;
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(lines.err("expected 'CENTER SIGMA'"));
            }
            let center: f64 = lines.parse(fields[0], "center")?;
            let sigma: f64 = lines.parse(fields[1], "sigma")?;
            bank.push(GaussianMf::new(center, sigma).map_err(|e| lines.err(e.to_string()))?);
        }
        names.push(name.trim().to_string());
        banks.push(bank);
    }
    let rule_count: usize = {
        let s = lines.keyword("rules")?;
        lines.parse(s, "rule count")?
    };
    let mut rules = Vec::with_capacity(rule_count);
    for _ in 0..rule_count {
        let l = lines.next_line()?;
        let (idx, params) = l
            .split_once(':')
            .ok_or_else(|| lines.err("expected 'INDICES : PARAMETERS'"))?;
        let antecedent = idx
            .split_whitespace()
            .map(|s| lines.parse(s, "MF index"))
            .collect::<Result<Vec<usize>>>()?;
        let params = params
            .split_whitespace()
            .map(|s| lines.parse(s, "consequent parameter"))
            .collect::<Result<Vec<f64>>>()?;
        let consequent = if linear {
            if params.len() != dims + 1 {
                return Err(lines.err(format!("expected {} linear parameters", dims + 1)));
            }
            Consequent::Linear {
                coefficients: params[..dims].to_vec(),
                bias: params[dims],
            }
        } else {
            if params.len() != 1 {
                return Err(lines.err("expected one constant parameter"));
            }
            Consequent::Constant(params[0])
        };
        rules.push(Rule { antecedent, consequent });
    }
    if let Ok(extra) = lines.next_line() {
        return Err(lines.err(format!("trailing content '{extra}'")));
    }
    SugenoFis::new(names, banks, rules, variant)
}

pub fn write_model(path: impl AsRef<Path>, fis: &SugenoFis) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(fis)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<SugenoFis> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text).map_err(|e| match e {
        Error::ModelFormat { line, message } => Error::ModelFormat {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// File name used for one (label, variant) model.
pub fn model_file_name(label: &str, variant: Variant) -> String {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{safe}.{variant}.model")
}

/// Manifest name for an ensemble variant (`fis`, `anfis` or `hybrid`).
pub fn manifest_file_name(ensemble_variant: &str) -> String {
    format!("ensemble.{ensemble_variant}.txt")
}

/// An ensemble on disk: tab-separated `expert LABEL VARIANT FILE` lines, in prediction order.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub ensemble_variant: String,
    pub experts: Vec<(String, Variant, String)>,
}

impl Manifest {
    pub fn for_ensemble(ensemble_variant: &str, ensemble: &ExpertEnsemble) -> Self {
        Self {
            ensemble_variant: ensemble_variant.to_string(),
            experts: ensemble
                .experts()
                .iter()
                .map(|(label, fis)| (label.clone(), fis.variant(), model_file_name(label, fis.variant())))
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{ENSEMBLE_MAGIC} {FORMAT_VERSION}\nvariant {}\n", self.ensemble_variant);
        for (label, variant, file) in &self.experts {
            out.push_str(&format!("expert\t{label}\t{variant}\t{file}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let version: u32 = {
            let v = lines.keyword(ENSEMBLE_MAGIC)?;
            lines.parse(v, "format version")?
        };
        if version != FORMAT_VERSION {
            return Err(lines.err(format!("unsupported ensemble format version {version}")));
        }
        let ensemble_variant = lines.keyword("variant")?.to_string();
        let mut experts = Vec::new();
        while let Ok(l) = lines.next_line() {
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() != 4 || fields[0] != "expert" {
                return Err(lines.err(format!("expected 'expert<TAB>LABEL<TAB>VARIANT<TAB>FILE', found '{l}'")));
            }
            let variant: Variant = fields[2].parse().map_err(|_| lines.err("unknown variant"))?;
            experts.push((fields[1].to_string(), variant, fields[3].to_string()));
        }
        Ok(Self {
            ensemble_variant,
            experts,
        })
    }
}

pub fn manifest_path(model_dir: &Path, ensemble_variant: &str) -> PathBuf {
    model_dir.join(manifest_file_name(ensemble_variant))
}

/// Writes every expert's model file plus the ensemble manifest.
pub fn save_ensemble(model_dir: &Path, ensemble_variant: &str, ensemble: &ExpertEnsemble) -> Result<()> {
    fs::create_dir_all(model_dir).map_err(|e| Error::io(model_dir, e))?;
    let manifest = Manifest::for_ensemble(ensemble_variant, ensemble);
    for ((_, fis), (_, _, file)) in ensemble.experts().iter().zip(&manifest.experts) {
        write_model(model_dir.join(file), fis)?;
    }
    let path = manifest_path(model_dir, ensemble_variant);
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))
}

pub fn load_ensemble(model_dir: &Path, ensemble_variant: &str) -> Result<ExpertEnsemble> {
    let path = manifest_path(model_dir, ensemble_variant);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = Manifest::parse(&text)?;
    let experts = manifest
        .experts
        .iter()
        .map(|(label, variant, file)| {
            let fis = read_model(model_dir.join(file))?;
            if fis.variant() != *variant {
                return Err(Error::Data(format!(
                    "{file}: manifest says {variant}, model says {}",
                    fis.variant()
                )));
            }
            Ok((label.clone(), fis))
        })
        .collect::<Result<Vec<_>>>()?;
    ExpertEnsemble::new(experts)
}
