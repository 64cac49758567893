use std::fs;

use gasketlab::blowup::{blowup_cloud, density_grid};
use gasketlab::capacity::{
    a3_report, corner_capacity_formula, inner_set, point_capacity, relative_capacity, sample_words, A3Config,
    CapacityResult, A3_CSV_HEADER,
};
use gasketlab::energy::{corner_decay_n, index_estimate, kusuoka_distribution, BasisFor, EnergyBasis};
use gasketlab::gasket::{CellScalar, Gasket, GasketSpec, Normalization, Word};
use gasketlab::harmonic::{renormalization_factor, spectral_data};
use gasketlab::hausdorff::hausdorff_bound;
use gasketlab::scalar::{format_rational, format_sig15, parse_rational, rat, rational_from_f64};
use gasketlab::{ArithmeticMode, Error, ModeRequest, Rational, Result, Scalar};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BlowupArgs, CapacityArgs, Command, CornerArgs, DimEstimateArgs, HausdorffArgs, ModeArgs, RenormArgs, SpecArgs,
    VerifyA3Args, WordsArgs,
};
use crate::output::{to_value, write_csv, write_json, write_text};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Renorm(a) => renorm(&a),
        Command::Spectra(a) => spectra(&a),
        Command::Words(a) => words(&a),
        Command::DimEstimate(a) => dim_estimate(&a),
        Command::VerifyA3(a) => verify_a3(&a),
        Command::Capacity(a) => capacity(&a),
        Command::Blowup(a) => blowup(&a),
        Command::Hausdorff(a) => hausdorff(&a),
    }
}

/// Report header shared by every JSON output.
fn envelope<C: Serialize>(
    subcommand: &str,
    config: &C,
    mode: ArithmeticMode,
    spec_digest: Option<String>,
    report: Value,
) -> Result<Value> {
    Ok(json!({
        "subcommand": subcommand,
        "config": to_value(config)?,
        "arithmetic_mode": mode,
        "spec_digest": spec_digest,
        "report": report,
    }))
}

fn load_gasket(s: &SpecArgs) -> Result<Gasket> {
    let text = fs::read_to_string(&s.spec)?;
    let spec = GasketSpec::from_json_str(&text)?;
    Ok(Gasket::new(spec)?.with_budget(s.budget))
}

fn parse_word(g: &Gasket, text: &str) -> Result<Word> {
    let w: Word = text.parse()?;
    g.check_admissible(&w)?;
    Ok(w)
}

/// `p/q`, an integer, or a decimal (converted exactly).
fn parse_number(text: &str) -> Result<Rational> {
    parse_rational(text)
        .or_else(|| text.trim().parse::<f64>().ok().and_then(rational_from_f64))
        .ok_or_else(|| Error::Parse(format!("`{text}` is not a number")))
}

fn resolve_mode(m: &ModeArgs, size: usize) -> ArithmeticMode {
    ModeRequest::from(m.mode).resolve(size, m.exact_threshold)
}

fn text_of<S: Scalar>(x: &S) -> String {
    match x.as_exact() {
        Some(r) => format_rational(r),
        None => x.to_f64().to_string(),
    }
}

fn round15(x: f64) -> f64 {
    format_sig15(x).parse().unwrap_or(x)
}

/// Corner-chain length from the flag, or the smallest one reaching the decay factor.
fn resolve_corner(g: &Gasket, c: &CornerArgs) -> Result<(usize, Value)> {
    if let Some(n) = c.corner_depth {
        return Ok((n, json!({ "n": n, "source": "flag" })));
    }
    let d = g.dimension();
    let decay = match &c.decay {
        Some(t) => parse_number(t)?,
        None => rat(1, 2 * (d as i64 + 1)),
    };
    let levels: Vec<u32> = g.spec().levels.iter().copied().collect();
    let found = corner_decay_n(d, &levels, &decay, c.max_corner_depth)?;
    Ok((
        found.n,
        json!({
            "n": found.n,
            "source": "corner decay search",
            "c": format_rational(&decay),
            "worst_ratio": found.worst_ratio,
            "chains_checked": found.chains_checked,
        }),
    ))
}

fn renorm(a: &RenormArgs) -> Result<()> {
    let r = renormalization_factor(a.dim, a.level)?;
    write_text(&format_rational(&r), a.out.as_deref())
}

fn spectra(a: &RenormArgs) -> Result<()> {
    let mut report = spectral_data(a.dim, a.level)?;
    report.r_float = round15(report.r_float);
    report.s_float = round15(report.s_float);
    report.theta_term_float = round15(report.theta_term_float);
    let v = envelope("spectra", a, ArithmeticMode::Exact, None, to_value(&report)?)?;
    write_json(&v, a.out.as_deref())
}

fn words(a: &WordsArgs) -> Result<()> {
    let g = load_gasket(&a.spec)?;
    let rows = g.enumerate_words(a.depth)?.into_iter().map(|rec| {
        [
            rec.word.encode(),
            rec.r.numer().to_string(),
            rec.r.denom().to_string(),
            rec.mu.numer().to_string(),
            rec.mu.denom().to_string(),
        ]
    });
    write_csv(&["word", "r_num", "r_den", "mu_num", "mu_den"], rows, a.out.as_deref())
}

fn dim_estimate(a: &DimEstimateArgs) -> Result<()> {
    let g = load_gasket(&a.spec)?;
    let cells = g.count_words(&Word::root(), a.depth)?;
    let exact = EnergyBasis::standard(g.dimension())?;
    match resolve_mode(&a.mode, cells) {
        ArithmeticMode::Exact => dim_estimate_in::<Rational>(&g, a, &exact),
        ArithmeticMode::Float => dim_estimate_in::<f64>(&g, a, &exact),
    }
}

fn dim_estimate_in<S: BasisFor>(g: &Gasket, a: &DimEstimateArgs, exact: &EnergyBasis<Rational>) -> Result<()> {
    let basis = S::basis(exact);
    let report = index_estimate(g, a.depth, a.eps, a.delta, &basis)?;
    if let Some(path) = &a.cells_csv {
        let cells = kusuoka_distribution(g, a.depth, &basis)?;
        let mut header: Vec<String> = ["word", "r_w", "mu_w", "nu_mass"].map(String::from).to_vec();
        header.extend((1..=basis.len()).map(|k| format!("lambda_{k}")));
        header.push("ratio21".into());
        let rows = cells.iter().map(|c| {
            let mut row = vec![c.word.encode(), text_of(&c.r), text_of(&c.mu), text_of(&c.nu_mass)];
            row.extend(c.eigenvalues.iter().map(f64::to_string));
            row.push(c.ratio21().to_string());
            row
        });
        write_csv(&header, rows, Some(path))?;
    }
    let v = envelope(
        "dim-estimate",
        a,
        report.arithmetic_mode,
        Some(g.spec().digest()),
        to_value(&report)?,
    )?;
    write_json(&v, a.out.as_deref())
}

/// Largest vertex count among the depth-`depth` networks below `words`.
fn network_size(g: &Gasket, words: &[Word], depth: usize) -> Result<usize> {
    let mut size = 0;
    for w in words {
        size = size.max(g.count_vertices(w, depth)?);
    }
    Ok(size)
}

fn verify_a3(a: &VerifyA3Args) -> Result<()> {
    let g = load_gasket(&a.spec)?;
    let (n, corner) = resolve_corner(&g, &a.corner)?;
    let cfg = A3Config {
        depth: a.depth,
        corner_depth: n,
        samples: a.samples,
        max_words: a.max_words,
        points_per_word: a.points,
        refinement: a.refinement,
        seed: a.seed,
    };
    let sampled = sample_words(&g, a.depth, a.max_words)?;
    let size = network_size(&g, &sampled, n + a.refinement)?;
    let report = match resolve_mode(&a.mode, size) {
        ArithmeticMode::Exact => a3_report::<Rational>(&g, &cfg)?,
        ArithmeticMode::Float => a3_report::<f64>(&g, &cfg)?,
    };
    if let Some(path) = &a.csv {
        write_csv(&A3_CSV_HEADER, report.samples.iter().map(|s| s.csv_row()), Some(path))?;
    }
    let mut body = to_value(&report)?;
    body["corner_depth"] = corner;
    let v = envelope("verify-a3", a, report.arithmetic_mode, Some(report.spec_digest.clone()), body)?;
    write_json(&v, a.out.as_deref())
}

fn capacity(a: &CapacityArgs) -> Result<()> {
    let g = load_gasket(&a.spec)?;
    let w = parse_word(&g, &a.word)?;
    let (n, corner) = resolve_corner(&g, &a.corner)?;
    let size = network_size(&g, std::slice::from_ref(&w), n + a.refinement)?;
    let mode = resolve_mode(&a.mode, size);
    let mut body = match mode {
        ArithmeticMode::Exact => capacity_in::<Rational>(&g, &w, n, a)?,
        ArithmeticMode::Float => capacity_in::<f64>(&g, &w, n, a)?,
    };
    body["corner_depth"] = corner;
    let v = envelope("capacity", a, mode, Some(g.spec().digest()), body)?;
    write_json(&v, a.out.as_deref())
}

fn capacity_in<S: CellScalar>(g: &Gasket, w: &Word, n: usize, a: &CapacityArgs) -> Result<Value> {
    let norm = Normalization::Absolute;
    let (result, formula): (CapacityResult<S>, Option<String>) = match a.vertex {
        Some(x) => (point_capacity(g, w, n, x, a.refinement, norm)?, None),
        None => {
            let desc = inner_set(g, w, n)?;
            let formula = format_rational(&corner_capacity_formula(g, &desc, norm));
            (relative_capacity(g, &desc, a.refinement, norm)?, Some(formula))
        }
    };
    let levels: Vec<Value> = result
        .levels
        .iter()
        .map(|l| {
            json!({
                "refinement": l.refinement,
                "network_depth": l.network_depth,
                "vertices": l.vertices,
                "value": l.value.to_f64(),
                "value_exact": l.value.as_exact().map(format_rational),
            })
        })
        .collect();
    Ok(json!({
        "target": result.target,
        "normalization": "absolute",
        "levels": levels,
        "non_increasing": result.is_non_increasing(),
        "last_relative_change": result.last_relative_change(),
        "closed_form": formula,
    }))
}

fn parse_basis(text: &str, d: usize) -> Result<[Vec<Rational>; 2]> {
    let parts: Vec<&str> = text.split(';').collect();
    let [p1, p2] = parts.as_slice() else {
        return Err(Error::Parse("--basis needs two vectors separated by `;`".into()));
    };
    let vector = |p: &str| -> Result<Vec<Rational>> {
        let v = p.split(',').map(parse_number).collect::<Result<Vec<_>>>()?;
        if v.len() != d + 1 {
            return Err(Error::InvalidParameter(format!(
                "basis vectors need {} entries, got {}",
                d + 1,
                v.len()
            )));
        }
        Ok(v)
    };
    Ok([vector(p1)?, vector(p2)?])
}

fn blowup(a: &BlowupArgs) -> Result<()> {
    let g = load_gasket(&a.spec)?;
    let d = g.dimension();
    let w = parse_word(&g, &a.word)?;
    let (n, corner) = resolve_corner(&g, &a.corner)?;
    let pair = match &a.basis {
        Some(text) => parse_basis(text, d)?,
        None => {
            let std = EnergyBasis::standard(d)?;
            [std.vectors()[0].clone(), std.vectors()[1].clone()]
        }
    };
    let size = network_size(&g, std::slice::from_ref(&w), a.depth.max(n + a.refinement))?;
    let mode = resolve_mode(&a.mode, size);
    let mut body = match mode {
        ArithmeticMode::Exact => blowup_in::<Rational>(&g, &w, &pair, n, a)?,
        ArithmeticMode::Float => blowup_in::<f64>(&g, &w, &pair, n, a)?,
    };
    body["corner_depth"] = corner;
    let v = envelope("blowup", a, mode, Some(g.spec().digest()), body)?;
    write_json(&v, a.out.as_deref())
}

fn blowup_in<S: CellScalar>(
    g: &Gasket,
    w: &Word,
    pair: &[Vec<Rational>; 2],
    n: usize,
    a: &BlowupArgs,
) -> Result<Value> {
    let b1: Vec<S> = pair[0].iter().map(S::from_rational).collect();
    let b2: Vec<S> = pair[1].iter().map(S::from_rational).collect();
    let cloud = blowup_cloud(g, w, &b1, &b2, a.depth, n, a.refinement)?;
    let grid = density_grid(&cloud, a.resolution)?;
    if let Some(path) = &a.cloud_csv {
        let rows = cloud.points.iter().map(|p| {
            [
                p.word.encode(),
                p.x.to_string(),
                p.y.to_string(),
                text_of(&p.weight),
                text_of(&p.e_value),
            ]
        });
        write_csv(&["word", "x", "y", "weight", "e_value"], rows, Some(path))?;
    }
    if let Some(path) = &a.grid_csv {
        let res = grid.resolution;
        let rows = (0..res * res).map(|k| [(k / res).to_string(), (k % res).to_string(), grid.mass[k].to_string()]);
        write_csv(&["row", "col", "mass"], rows, Some(path))?;
    }
    let mut body = to_value(&cloud.summary())?;
    body["pair"] = json!([
        pair[0].iter().map(format_rational).collect::<Vec<_>>(),
        pair[1].iter().map(format_rational).collect::<Vec<_>>(),
    ]);
    body["grid_resolution"] = json!(grid.resolution);
    body["grid_total"] = json!(grid.total());
    Ok(body)
}

fn hausdorff(a: &HausdorffArgs) -> Result<()> {
    let spec = GasketSpec::from_json_str(&fs::read_to_string(&a.spec)?)?;
    let bounds = hausdorff_bound(&spec)?;
    let mut body = to_value(&bounds)?;
    body["expressions"] = json!({
        "log_ratio_bound": "min over levels l of ln(N(l) / l)",
        "frostman_exponent": "min over levels l of ln N(l) / ln l",
        "dimension_floor": "ln((d + 1) / 2)",
    });
    let v = envelope("hausdorff", a, ArithmeticMode::Float, Some(spec.digest()), body)?;
    write_json(&v, a.out.as_deref())
}
