use ergolab::zoo::SystemDescriptor;
use serde::Serialize;

use crate::settings::Settings;

#[derive(Debug, Clone, Serialize)]
pub struct KindEntry {
    pub kind: &'static str,
    pub grammar: &'static str,
    pub cells: &'static str,
    pub bounds: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Catalog {
    pub cell_cap: usize,
    pub kinds: Vec<KindEntry>,
    /// Systems used by the shipped acceptance configs and checks.
    pub inventory: Vec<String>,
    pub experiments: Vec<&'static str>,
    pub notes: Vec<&'static str>,
}

const INVENTORY: [&str; 9] = [
    "identity:n=64",
    "cyclic_rotation:n=8",
    "cyclic_rotation:n=144",
    "cyclic_rotation:n=1024",
    "odometer:b=2,l=8",
    "bernoulli_cyclic:k=2,L=8",
    "bernoulli_cyclic:k=2,L=10",
    "bernoulli_cyclic:k=2,L=16",
    "random_permutation:n=512,seed=7",
];

pub fn catalog(settings: &Settings) -> Catalog {
    let cap = settings.cell_cap;
    let kinds = SystemDescriptor::grammar()
        .into_iter()
        .map(|(kind, grammar)| {
            let (cells, bounds) = match kind {
                "identity" | "cyclic_rotation" => ("n", format!("1 ≤ n ≤ {cap}")),
                "odometer" => ("b^l", format!("b ≥ 2, l ≥ 1, b^l ≤ {cap}")),
                "bernoulli_cyclic" => ("k^L", format!("k ≥ 2, L ≥ 2, k^L ≤ {cap}")),
                _ => ("n", format!("1 ≤ n ≤ {cap}, any u64 seed")),
            };
            KindEntry { kind, grammar, cells, bounds }
        })
        .collect();
    Catalog {
        cell_cap: cap,
        kinds,
        inventory: INVENTORY.iter().map(|s| s.to_string()).collect(),
        experiments: vec!["scan", "entropy", "spectral", "ensemble"],
        notes: vec![
            "cell cap: override with --cell-cap or ERGOLAB_CELL_CAP; product spaces count base × fiber cells",
            "every zoo system is a finite permutation, so its spectral measures are atomic and the singularity classifier reports singular_witnessed on them given enough lags; continuous spectra enter only through external correlation CSVs (spectral-classify)",
        ],
    }
}

pub fn render_text(c: &Catalog) -> String {
    let mut out = String::from("System descriptors (kind:key=value,...)\n");
    for k in &c.kinds {
        out.push_str(&format!("  {:<20} {}\n  {:<20} cells = {}; {}\n", k.kind, k.grammar, "", k.cells, k.bounds));
    }
    out.push_str(&format!("\nCell cap: {} cells\n\nInventory:\n", c.cell_cap));
    for s in &c.inventory {
        out.push_str(&format!("  {s}\n"));
    }
    out.push_str(&format!("\nExperiment kinds: {}\n\nNotes:\n", c.experiments.join(", ")));
    for n in &c.notes {
        out.push_str(&format!("  - {n}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_parses_and_fits_the_default_cap() {
        let c = catalog(&Settings::default());
        for s in &c.inventory {
            let d: SystemDescriptor = s.parse().unwrap();
            assert!(d.cell_count() <= c.cell_cap as u128, "{s}");
            assert_eq!(&d.to_string(), s);
        }
        assert_eq!(c.kinds.len(), SystemDescriptor::KINDS.len());
    }
}
