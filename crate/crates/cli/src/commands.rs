use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ftc_sensor::floquet::diagonalize;
use ftc_sensor::semiclassical::{comparison_table, write_comparison_csv, SemiclassicalError};
use rayon::prelude::*;

use crate::config::{Overrides, Scenario};
use crate::output::{create_dir, io_error, record_output, write_file, write_items, Manifest};
use crate::run::{compute_all, prepare, Item, ItemError};
use crate::CliError;

fn finish(manifest: &Manifest, out: &Path) -> Result<(), CliError> {
    manifest.write(out)?;
    if manifest.has_errors() {
        let n = manifest.items.iter().filter(|i| i.status == "error").count();
        return Err(CliError::Numerical(format!(
            "{n} item(s) failed; see {}",
            out.join("manifest.json").display()
        )));
    }
    Ok(())
}

pub fn run(path: &Path, overrides: &Overrides, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let scn = Scenario::load(path, overrides)?;
    let prep = prepare(&scn)?;
    let items = compute_all(&scn, &prep)?;
    let mut manifest = Manifest::new("run", seed, &scn);
    write_items(out, out, &scn, &prep, &items, &mut manifest)?;
    finish(&manifest, out)
}

pub fn sweep(path: &Path, overrides: &Overrides, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let scn = Scenario::load(path, overrides)?;
    let sw = scn
        .sweep
        .clone()
        .ok_or_else(|| CliError::Usage("scenario has no [sweep] section".into()))?;
    let (sig, _) = scn.dynamics()?;
    let ns = if sw.n.is_empty() { vec![scn.params.n] } else { sw.n.clone() };
    let bs = if sw.b.is_empty() { vec![scn.params.b] } else { sw.b.clone() };
    let hs = if sw.h.is_empty() { vec![sig.h] } else { sw.h.clone() };
    let mut points = Vec::new();
    for &n in &ns {
        for &b in &bs {
            for &h in &hs {
                let mut s = scn.clone();
                s.params.n = n;
                s.params.b = b;
                s.params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                if let Some(sig) = s.signal.as_mut() {
                    sig.h = h;
                }
                let name = if sw.h.is_empty() { format!("N{n}_B{b}") } else { format!("N{n}_B{b}_h{h}") };
                points.push((name, s));
            }
        }
    }
    let results = points
        .par_iter()
        .map(|(_, s)| {
            let mut prep = prepare(s)?;
            prep.grid.extend(&sw.summary_n);
            prep.grid.sort_unstable();
            prep.grid.dedup();
            let items = compute_all(s, &prep)?;
            Ok((prep, items))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    create_dir(out)?;
    let mut manifest = Manifest::new("sweep", seed, &scn);
    let mut summary = String::from("N,B,h,state,provenance,n,F\n");
    for ((name, s), (prep, items)) in points.iter().zip(&results) {
        let dir = out.join(name);
        let start = manifest.items.len();
        write_items(out, &dir, s, prep, items, &mut manifest)?;
        for rec in &mut manifest.items[start..] {
            rec.point = Some(name.clone());
        }
        for item in items {
            let Ok(c) = &item.outcome else { continue };
            for &n in &sw.summary_n {
                if let Some(i) = c.series.n.iter().position(|&m| m == n) {
                    let _ = writeln!(
                        summary,
                        "{},{},{:e},{},{},{},{:e}",
                        s.params.n,
                        s.params.b,
                        s.dynamics()?.0.h,
                        item.state.tag(),
                        item.provenance,
                        n,
                        c.series.values[i]
                    );
                }
            }
        }
    }
    let summary_path = out.join("sweep_summary.csv");
    let sha = write_file(&summary_path, summary.as_bytes())?;
    record_output(out, &summary_path, sha, &mut manifest);
    finish(&manifest, out)
}

fn single_provenance(scn: &Scenario, path: &Path) -> Result<(), CliError> {
    if scn.provenance.len() != 1 {
        return Err(CliError::Usage(format!(
            "{}: verify needs exactly one provenance, got {}",
            path.display(),
            scn.provenance.len()
        )));
    }
    Ok(())
}

fn series_of(item: &Item) -> Result<&[f64], CliError> {
    let tag = item.state.tag();
    match &item.outcome {
        Ok(c) => Ok(&c.series.values),
        Err(ItemError::Incompatible(m)) => Err(CliError::Usage(format!("{tag}/{}: {m}", item.provenance))),
        Err(ItemError::Numerical(m)) => Err(CliError::Numerical(format!("{tag}/{}: {m}", item.provenance))),
    }
}

/// Largest `|a − b| / max(|a|, |b|)` and the index where it occurs; points
/// where both vanish are skipped.
fn max_relative(a: &[f64], b: &[f64]) -> (f64, usize) {
    a.iter()
        .zip(b)
        .enumerate()
        .filter_map(|(i, (x, y))| {
            let scale = x.abs().max(y.abs());
            (scale > 0.0).then(|| ((x - y).abs() / scale, i))
        })
        .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

pub fn verify(a: &Path, b: &Path, tolerance: f64, precision: Option<u32>) -> Result<(), CliError> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(CliError::Usage(format!("tolerance must be a non-negative number, got {tolerance}")));
    }
    let overrides = Overrides {
        precision,
        provenance: None,
    };
    let sa = Scenario::load(a, &overrides)?;
    let sb = Scenario::load(b, &overrides)?;
    single_provenance(&sa, a)?;
    single_provenance(&sb, b)?;
    let (pa, pb) = (prepare(&sa)?, prepare(&sb)?);
    if pa.grid != pb.grid || sa.params.t != sb.params.t {
        return Err(CliError::Usage(
            "the two scenarios sample different times; refusing to resample".into(),
        ));
    }
    let ia = compute_all(&sa, &pa)?;
    let ib = compute_all(&sb, &pb)?;
    let by_tag: BTreeMap<String, &Item> = ib.iter().map(|i| (i.state.tag(), i)).collect();
    let mut compared = 0;
    let mut failures = Vec::new();
    println!("state,provenance_a,provenance_b,max_rel,n,status");
    for x in &ia {
        let tag = x.state.tag();
        let Some(y) = by_tag.get(&tag) else { continue };
        let (va, vb) = (series_of(x)?, series_of(y)?);
        let (rel, i) = max_relative(va, vb);
        let ok = rel <= tolerance;
        println!(
            "{tag},{},{},{rel:e},{},{}",
            x.provenance,
            y.provenance,
            pa.grid[i],
            if ok { "pass" } else { "fail" }
        );
        if !ok {
            failures.push(format!("{tag}: {rel:e} at n = {}", pa.grid[i]));
        }
        compared += 1;
    }
    if compared == 0 {
        return Err(CliError::Usage("the two scenarios share no state".into()));
    }
    if !failures.is_empty() {
        return Err(CliError::Verification(format!(
            "relative difference above {tolerance:e}: {}",
            failures.join("; ")
        )));
    }
    Ok(())
}

pub fn spectrum(path: &Path, overrides: &Overrides, out: Option<&Path>) -> Result<(), CliError> {
    let scn = Scenario::load(path, overrides)?;
    let spec = diagonalize(&scn.params, scn.precision_mode()?).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut json = spec.to_json();
    json.push('\n');
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join("spectrum.json"), json.as_bytes()).map(|_| ())
        }
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

pub fn semiclassical(path: &Path, overrides: &Overrides, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let scn = Scenario::load(path, overrides)?;
    let sc = scn.semiclassical.clone().unwrap_or_default();
    let rows = comparison_table(&sc.k, &sc.n, &sc.b, scn.precision_mode()?).map_err(|e| match e {
        SemiclassicalError::OutOfPhase(_) => CliError::Usage(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    })?;
    create_dir(out)?;
    let mut csv = Vec::new();
    let csv_path = out.join("semiclassical.csv");
    write_comparison_csv(&rows, &mut csv).map_err(io_error(&csv_path))?;
    let sha = write_file(&csv_path, &csv)?;
    let mut manifest = Manifest::new("semiclassical", seed, &scn);
    record_output(out, &csv_path, sha, &mut manifest);
    finish(&manifest, out)
}
