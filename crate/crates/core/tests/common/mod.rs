#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rarevas::linalg::{rat_frac, Rat, RatMatrix};
use rarevas::model::{parse_model, PropertySpec, VasModel};

pub fn models_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn load(name: &str) -> (VasModel, PropertySpec) {
    let text = std::fs::read_to_string(models_dir().join(name)).unwrap();
    parse_model(&text).unwrap()
}

/// Random rational matrix with small numerators and denominators.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RatMatrix {
    let data: Vec<Vec<Rat>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        rat_frac(0, 1)
                    } else {
                        rat_frac(rng.gen_range(-4..=4), rng.gen_range(1..=3))
                    }
                })
                .collect()
        })
        .collect();
    RatMatrix::from_rows(data)
}

/// Text of a random small model: 1–3 species, 1–4 reactions, an equality
/// target on one species and a short time bound.
pub fn random_model_text(rng: &mut ChaCha8Rng) -> String {
    let m = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=4);
    let names: Vec<String> = (0..m).map(|i| format!("X{i}")).collect();
    let init: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=3)).collect();
    let side = |rng: &mut ChaCha8Rng| -> String {
        let terms: Vec<String> = names
            .iter()
            .filter_map(|name| match rng.gen_range(0..=4) {
                0..=2 => None,
                3 => Some(name.clone()),
                _ => Some(format!("2*{name}")),
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    };
    let mut text = format!(
        "species: {}\ninit: {}\ntime: {}\n",
        names.join(" "),
        init.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" "),
        rng.gen_range(1..=4)
    );
    let target = rng.gen_range(0..m);
    let value = (init[target] + rng.gen_range(-1..=4)).max(0);
    text.push_str(&format!("target: {} = {value}\n", names[target]));
    for j in 0..n {
        let rate = format!("{}.{}", rng.gen_range(0..=2), rng.gen_range(1..=9));
        text.push_str(&format!(
            "reaction: r{j} : {} -> {} @ {rate}\n",
            side(rng),
            side(rng)
        ));
    }
    text
}

/// Compares heuristic bounds with the exhaustive oracle on random models until
/// `per_method` models were checked for each method. The oracle box is the
/// bounding box of every state the heuristic indexed, so the oracle graph
/// contains the heuristic graph and its bound can only be larger. Stiff or
/// oversized cases are skipped. Returns the number of models checked per
/// method, or a description of the first violation.
pub fn soundness_sweep(seed: u64, per_method: usize) -> Result<[usize; 2], String> {
    use rand::SeedableRng;
    use rarevas::ctmc::{build_ctmc, transient_lower_bound};
    use rarevas::oracle::{exhaustive_graph, TruncationBox};
    use rarevas::pipeline::{analyse, explore, RunOptions};
    use rarevas::search::Method;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = [0usize; 2];
    let mut attempts = 0;
    while checked.iter().any(|&c| c < per_method) {
        attempts += 1;
        if attempts > 100 * per_method {
            return Err(format!("too few checkable random models: {checked:?}"));
        }
        let Ok((model, prop)) = parse_model(&random_model_text(&mut rng)) else {
            continue;
        };
        for (slot, method) in [Method::Sdp, Method::Isr].into_iter().enumerate() {
            if checked[slot] >= per_method {
                continue;
            }
            let mut opts = RunOptions::new(method, rng.gen_range(1..=3));
            opts.max_states = 400;
            let mut out = explore(&model, &prop, &opts).map_err(|e| e.to_string())?;
            let Some(g) = &out.graph else {
                if out.unreachable.is_none() {
                    return Err("run without graph and without unreachability evidence".into());
                }
                checked[slot] += 1;
                continue;
            };
            // keep the uniformization series short
            if build_ctmc(g).max_exit_rate() * out.time_bound > 2e3 {
                continue;
            }
            let mut bounds = model.initial.counts().to_vec();
            for s in g.states() {
                for (b, &x) in bounds.iter_mut().zip(s.counts()) {
                    *b = (*b).max(x);
                }
            }
            let bx = TruncationBox::new(bounds);
            if bx.volume() > 2e4 {
                continue;
            }
            let og = build_ctmc(&exhaustive_graph(&model, &prop, &bx).map_err(|e| e.to_string())?);
            if og.max_exit_rate() * out.time_bound > 2e3 {
                continue;
            }
            analyse(&mut out, 1e-12).map_err(|e| e.to_string())?;
            let oracle = transient_lower_bound(&og, out.time_bound, 1e-12)
                .map_err(|e| e.to_string())?
                .p_min;
            if out.p_min > oracle + 1e-12 {
                return Err(format!(
                    "{method}: heuristic {} exceeds oracle {oracle}\n{}",
                    out.p_min,
                    rarevas::model::write_model(&model, &prop)
                ));
            }
            checked[slot] += 1;
        }
    }
    Ok(checked)
}
