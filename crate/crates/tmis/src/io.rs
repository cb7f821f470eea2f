//! File formats: model and policy JSON, datasets as JSON lines or CSV, and
//! the variance report.
//!
//! Model JSON:
//!
//! ```json
//! {"S": 2, "A": 2, "H": 3, "d1": [..], "P": [[[[..]]]], "r": [[[..]]],
//!  "noise": "deterministic", "r_max": 1.0}
//! ```
//!
//! `P` is indexed `[t][s][a][s']` for the `H - 1` transitions between steps
//! and `r` is `[t][s][a]`. A policy is `{"H", "S", "A", "table": [t][s][a]}`.
//!
//! A JSON-lines dataset has one episode per line, each an array of
//! `[state, action, reward]` triples. The CSV form has the header
//! `episode,t,s,a,r` with 0-based `t`; rows may come in any order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use tmis_core::analysis::VarianceReport;
use tmis_core::{Dataset, Policy, RewardNoise, Step, TabularMdp, Trajectory};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[allow(non_snake_case)]
pub struct ModelDoc {
    pub S: usize,
    pub A: usize,
    pub H: usize,
    pub d1: Vec<f64>,
    pub P: Vec<Vec<Vec<Vec<f64>>>>,
    pub r: Vec<Vec<Vec<f64>>>,
    #[serde(default = "default_noise")]
    pub noise: String,
    pub r_max: f64,
}

fn default_noise() -> String {
    "deterministic".into()
}

impl ModelDoc {
    pub fn from_model(mdp: &TabularMdp) -> Self {
        let (s, a, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        ModelDoc {
            S: s,
            A: a,
            H: h,
            d1: mdp.initial().to_vec(),
            P: (0..h - 1)
                .map(|t| (0..s).map(|x| (0..a).map(|y| mdp.transition(t, x, y).to_vec()).collect()).collect())
                .collect(),
            r: (0..h)
                .map(|t| (0..s).map(|x| (0..a).map(|y| mdp.mean_reward(t, x, y)).collect()).collect())
                .collect(),
            noise: match mdp.noise() {
                RewardNoise::Deterministic => "deterministic",
                RewardNoise::Bernoulli => "bernoulli",
            }
            .into(),
            r_max: mdp.reward_max(),
        }
    }

    pub fn into_model(self) -> anyhow::Result<TabularMdp> {
        let noise = match self.noise.to_ascii_lowercase().as_str() {
            "deterministic" => RewardNoise::Deterministic,
            "bernoulli" => RewardNoise::Bernoulli,
            other => bail!("unknown reward noise '{other}'"),
        };
        if self.P.len() != self.H.saturating_sub(1) {
            bail!("P has {} time slices, expected H - 1 = {}", self.P.len(), self.H.saturating_sub(1));
        }
        if self.r.len() != self.H {
            bail!("r has {} time slices, expected H = {}", self.r.len(), self.H);
        }
        let transitions = flatten3(self.P, self.S, self.A, self.S).context("P")?;
        let rewards = flatten2(self.r, self.S, self.A).context("r")?;
        Ok(TabularMdp::new(self.S, self.A, self.H, self.d1, transitions, rewards, noise, self.r_max)?)
    }
}

fn flatten2(xs: Vec<Vec<Vec<f64>>>, d1: usize, d2: usize) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (t, slice) in xs.into_iter().enumerate() {
        if slice.len() != d1 {
            bail!("slice {t} has {} rows, expected {d1}", slice.len());
        }
        for (i, row) in slice.into_iter().enumerate() {
            if row.len() != d2 {
                bail!("row [{t}][{i}] has {} entries, expected {d2}", row.len());
            }
            out.extend(row);
        }
    }
    Ok(out)
}

fn flatten3(xs: Vec<Vec<Vec<Vec<f64>>>>, d1: usize, d2: usize, d3: usize) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (t, slice) in xs.into_iter().enumerate() {
        if slice.len() != d1 {
            bail!("slice {t} has {} rows, expected {d1}", slice.len());
        }
        out.extend(flatten2(slice, d2, d3).with_context(|| format!("slice {t}"))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[allow(non_snake_case)]
pub struct PolicyDoc {
    pub H: usize,
    pub S: usize,
    pub A: usize,
    pub table: Vec<Vec<Vec<f64>>>,
}

impl PolicyDoc {
    pub fn from_policy(pi: &Policy) -> Self {
        let (h, s, a) = pi.dims();
        PolicyDoc {
            H: h,
            S: s,
            A: a,
            table: (0..h).map(|t| (0..s).map(|x| pi.row(t, x).to_vec()).collect()).collect(),
        }
    }

    pub fn into_policy(self) -> anyhow::Result<Policy> {
        if self.table.len() != self.H {
            bail!("policy table has {} time slices, expected {}", self.table.len(), self.H);
        }
        let flat = flatten2(self.table, self.S, self.A)?;
        Ok(Policy::new(self.H, self.S, self.A, flat)?)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> anyhow::Result<TabularMdp> {
    read_json::<ModelDoc>(path)?.into_model().with_context(|| format!("model {}", path.display()))
}

pub fn write_model(path: &Path, mdp: &TabularMdp) -> anyhow::Result<()> {
    write_json(path, &ModelDoc::from_model(mdp))
}

pub fn read_policy(path: &Path) -> anyhow::Result<Policy> {
    read_json::<PolicyDoc>(path)?.into_policy().with_context(|| format!("policy {}", path.display()))
}

pub fn write_policy(path: &Path, pi: &Policy) -> anyhow::Result<()> {
    write_json(path, &PolicyDoc::from_policy(pi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    JsonLines,
    Csv,
}

impl DatasetFormat {
    /// `.csv` selects CSV; anything else is JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::JsonLines,
        }
    }
}

pub fn write_dataset_jsonl<W: Write>(mut w: W, data: &Dataset) -> anyhow::Result<()> {
    for ep in data.episodes() {
        let triples: Vec<(u32, u32, f64)> = ep.steps.iter().map(|s| (s.state, s.action, s.reward)).collect();
        serde_json::to_writer(&mut w, &triples)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_dataset_csv<W: Write>(w: W, data: &Dataset) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["episode", "t", "s", "a", "r"])?;
    for (i, ep) in data.episodes().iter().enumerate() {
        for (t, s) in ep.steps.iter().enumerate() {
            out.write_record([
                i.to_string(),
                t.to_string(),
                s.state.to_string(),
                s.action.to_string(),
                s.reward.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads JSON-lines episodes; blank lines are skipped.
pub fn read_dataset_jsonl<R: BufRead>(r: R, num_states: usize, num_actions: usize) -> anyhow::Result<Dataset> {
    let mut episodes = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let triples: Vec<(usize, usize, f64)> =
            serde_json::from_str(&line).with_context(|| format!("episode on line {}", lineno + 1))?;
        episodes.push(Trajectory::new(triples.into_iter().map(|(s, a, r)| Step::new(s, a, r)).collect()));
    }
    let horizon = episodes.first().map(Trajectory::len).unwrap_or(0);
    Ok(Dataset::new(num_states, num_actions, horizon, episodes)?)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    episode: usize,
    t: usize,
    s: usize,
    a: usize,
    r: f64,
}

pub fn read_dataset_csv<R: Read>(r: R, num_states: usize, num_actions: usize) -> anyhow::Result<Dataset> {
    let mut by_episode: BTreeMap<usize, BTreeMap<usize, Step>> = BTreeMap::new();
    for (k, row) in csv::Reader::from_reader(r).deserialize::<CsvRow>().enumerate() {
        let row = row.with_context(|| format!("CSV record {}", k + 1))?;
        if by_episode.entry(row.episode).or_default().insert(row.t, Step::new(row.s, row.a, row.r)).is_some() {
            bail!("duplicate row for episode {} step {}", row.episode, row.t);
        }
    }
    let mut episodes = Vec::with_capacity(by_episode.len());
    for (ep, steps) in by_episode {
        if steps.keys().enumerate().any(|(i, &t)| i != t) {
            bail!("episode {ep} has non-contiguous steps");
        }
        episodes.push(Trajectory::new(steps.into_values().collect()));
    }
    let horizon = episodes.first().map(Trajectory::len).unwrap_or(0);
    Ok(Dataset::new(num_states, num_actions, horizon, episodes)?)
}

pub fn read_dataset(path: &Path, num_states: usize, num_actions: usize) -> anyhow::Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let data = match DatasetFormat::from_path(path) {
        DatasetFormat::Csv => read_dataset_csv(file, num_states, num_actions),
        DatasetFormat::JsonLines => read_dataset_jsonl(BufReader::new(file), num_states, num_actions),
    };
    data.with_context(|| format!("dataset {}", path.display()))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    match DatasetFormat::from_path(path) {
        DatasetFormat::Csv => write_dataset_csv(&mut w, data)?,
        DatasetFormat::JsonLines => write_dataset_jsonl(&mut w, data)?,
    }
    w.flush()?;
    Ok(())
}

/// JSON form of [`VarianceReport`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VarianceReportDoc {
    pub n: u64,
    pub crlb_asymptotic: f64,
    pub smis_asymptotic: f64,
    pub tmis_bound_leading: f64,
    pub tmis_bound_higher_order: f64,
    pub tmis_bound: f64,
    pub per_timestep_terms: Vec<f64>,
    pub in_regime: bool,
    pub tau_s: f64,
    pub tau_a: f64,
    pub d_m: f64,
    pub d_m_sa: f64,
}

impl From<&VarianceReport> for VarianceReportDoc {
    fn from(r: &VarianceReport) -> Self {
        VarianceReportDoc {
            n: r.n,
            crlb_asymptotic: r.crlb_asymptotic,
            smis_asymptotic: r.smis_asymptotic,
            tmis_bound_leading: r.tmis_bound_leading,
            tmis_bound_higher_order: r.tmis_bound_higher_order,
            tmis_bound: r.tmis_bound(),
            per_timestep_terms: r.per_timestep_terms.clone(),
            in_regime: r.in_regime,
            tau_s: r.ratios.tau_s,
            tau_a: r.ratios.tau_a,
            d_m: r.ratios.d_m,
            d_m_sa: r.ratios.d_m_sa,
        }
    }
}
