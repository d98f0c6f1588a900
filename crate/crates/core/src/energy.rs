//! Energy accounting and scheduler comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{greedy_ig, naive_ig, reference_es};
use crate::memory::{Instruction, MemLayout};
use crate::netlist::Netlist;
use crate::scheduler::{schedule, ScheduleError, ScheduleResult, SchedulerConfig};
use crate::validate::{equivalence_check, validate_is, VectorSpec};

/// Energy units per instruction kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub e_compute: f64,
    pub e_copy: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            e_compute: 1.0,
            e_copy: 1.87,
        }
    }
}

impl EnergyParams {
    pub fn new(e_compute: f64, e_copy: f64) -> Option<Self> {
        let p = EnergyParams { e_compute, e_copy };
        p.is_valid().then_some(p)
    }

    pub fn is_valid(&self) -> bool {
        self.e_compute > 0.0
            && self.e_copy > 0.0
            && self.e_compute.is_finite()
            && self.e_copy.is_finite()
    }
}

/// Energy parameters per array size, with a fallback for sizes not listed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    #[serde(default)]
    pub default: EnergyParams,
    #[serde(default)]
    pub by_rows: BTreeMap<usize, EnergyParams>,
}

impl EnergyTable {
    pub fn params_for(&self, rows_per_array: usize) -> EnergyParams {
        self.by_rows
            .get(&rows_per_array)
            .copied()
            .unwrap_or(self.default)
    }
}

/// Multiplies each count once; no per-instruction accumulation.
pub fn energy_counts(computes: usize, copies: usize, params: &EnergyParams) -> f64 {
    computes as f64 * params.e_compute + copies as f64 * params.e_copy
}

pub fn energy_of(is: &[Instruction], params: &EnergyParams) -> f64 {
    let copies = is.iter().filter(|i| i.is_copy()).count();
    energy_counts(is.len() - copies, copies, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Naive,
    Greedy,
    Masim,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [
        SchedulerKind::Naive,
        SchedulerKind::Greedy,
        SchedulerKind::Masim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Naive => "naive",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::Masim => "masim",
        }
    }

    /// Runs this scheduler. Baselines take their order from
    /// [`reference_es`] seeded with the master seed.
    pub fn run(
        self,
        net: &Netlist,
        config: &SchedulerConfig,
    ) -> Result<ScheduleResult, ScheduleError> {
        match self {
            SchedulerKind::Masim => schedule(net, config),
            SchedulerKind::Naive | SchedulerKind::Greedy => {
                let es = reference_es(net, config.master_seed);
                let mut res = if self == SchedulerKind::Naive {
                    naive_ig(net, &es, config.layout)?
                } else {
                    greedy_ig(net, &es, config.layout)?
                };
                res.seed = config.master_seed;
                Ok(res)
            }
        }
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(SchedulerKind::Naive),
            "greedy" => Ok(SchedulerKind::Greedy),
            "masim" => Ok(SchedulerKind::Masim),
            other => Err(format!(
                "unknown scheduler '{other}' (expected naive, greedy or masim)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scheduler: SchedulerKind,
    pub rows_per_array: usize,
    pub num_arrays: usize,
    pub seed: u64,
    /// `None` when the scheduler failed; see `error`.
    pub copies: Option<usize>,
    pub computes: Option<usize>,
    pub arrays_used: Option<usize>,
    pub energy: Option<f64>,
    pub normalized_energy: Option<f64>,
    pub valid: Option<bool>,
    pub equivalent: Option<bool>,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub netlist_hash: String,
    pub rows: Vec<ComparisonRow>,
}

/// Runs every scheduler on every layout. Energies are normalized to the
/// largest energy among the successful runs of the same layout.
pub fn compare(
    net: &Netlist,
    layouts: &[MemLayout],
    schedulers: &[SchedulerKind],
    config: &SchedulerConfig,
    energies: &EnergyTable,
    vectors: VectorSpec,
) -> ComparisonTable {
    let mut rows = Vec::new();
    for &layout in layouts {
        let params = energies.params_for(layout.rows_per_array);
        let cfg = SchedulerConfig { layout, ..*config };
        let first = rows.len();
        for &kind in schedulers {
            let t0 = Instant::now();
            let res = kind.run(net, &cfg);
            let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
            let mut row = ComparisonRow {
                scheduler: kind,
                rows_per_array: layout.rows_per_array,
                num_arrays: layout.num_arrays,
                seed: config.master_seed,
                copies: None,
                computes: None,
                arrays_used: None,
                energy: None,
                normalized_energy: None,
                valid: None,
                equivalent: None,
                runtime_ms,
                error: None,
            };
            match res {
                Ok(r) => {
                    row.copies = Some(r.copies);
                    row.computes = Some(r.computes);
                    row.arrays_used = Some(r.arrays_used);
                    row.energy = Some(r.energy(&params));
                    row.valid = Some(validate_is(net, &r.instructions, layout).is_clean());
                    row.equivalent =
                        Some(equivalence_check(net, &r.instructions, layout, vectors).equivalent);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
        normalize(&mut rows[first..]);
    }
    ComparisonTable {
        netlist_hash: net.content_hash(),
        rows,
    }
}

fn normalize(rows: &mut [ComparisonRow]) {
    let max = rows.iter().filter_map(|r| r.energy).fold(0.0, f64::max);
    if max > 0.0 {
        for r in rows {
            r.normalized_energy = r.energy.map(|e| e / max);
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn opt_f(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "-".into())
}

impl ComparisonTable {
    const HEADER: [&'static str; 12] = [
        "scheduler",
        "rows",
        "arrays",
        "copies",
        "computes",
        "arrays_used",
        "energy",
        "normalized",
        "valid",
        "equivalent",
        "runtime_ms",
        "seed",
    ];

    fn cells(&self) -> Vec<[String; 12]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.scheduler.name().to_string(),
                    r.rows_per_array.to_string(),
                    r.num_arrays.to_string(),
                    opt(r.copies),
                    opt(r.computes),
                    opt(r.arrays_used),
                    opt_f(r.energy, 2),
                    opt_f(r.normalized_energy, 4),
                    opt(r.valid),
                    opt(r.equivalent),
                    format!("{:.1}", r.runtime_ms),
                    r.seed.to_string(),
                ]
            })
            .collect()
    }

    /// Aligned text table; failures are listed below it.
    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut width: Vec<usize> = Self::HEADER.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&mut out, &Self::HEADER.map(String::from));
        for row in &cells {
            line(&mut out, row);
        }
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(
                out,
                "{} ({}x{}): {}",
                r.scheduler.name(),
                r.rows_per_array,
                r.num_arrays,
                r.error.as_deref().unwrap()
            );
        }
        out.push_str("naive and greedy are simplified reconstructions of earlier schedulers\n");
        out.push_str(
            "runtimes are single wall-clock runs; baselines are not repeated to match runtime\n",
        );
        out
    }

    /// One line per (layout, scheduler), with the netlist hash as instance id.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,");
        out.push_str(&Self::HEADER.join(","));
        out.push_str(",error\n");
        for (r, cells) in self.rows.iter().zip(self.cells()) {
            let err = r.error.as_deref().unwrap_or("").replace('"', "'");
            let _ = writeln!(out, "{},{},\"{err}\"", self.netlist_hash, cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}
