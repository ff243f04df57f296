use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use magnn_core::explain::{explain, prune_explanation, relax_bounds, Explanation};
use magnn_core::forward::apply;
use magnn_core::fuzz::{fuzz_rules, FuzzConfig};
use magnn_core::linkpred::{lp_encode, unfold, PAIR_COLOURS};
use magnn_core::logic::{parse_rule, parse_rules, Fragment};
use magnn_core::soundness::{check_eluq, check_restricted, enumerate_sound, ExtractionOptions};
use magnn_core::{Dataset, Error, Fact, MagnnModel, RestrictedRule, Rule, Signature};
use serde_json::{json, Value};

use crate::{Cli, Command, Format};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(cli: &Cli) -> Result<MagnnModel> {
    let path = cli.global.model.as_deref().ok_or_else(|| anyhow!("--model is required"))?;
    let mut m = MagnnModel::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    m.check_evaluable().with_context(|| format!("loading {}", path.display()))?;
    if let Some(dir) = cli.global.direction {
        m.direction = dir;
    }
    if let Some(sig_path) = &cli.global.signature {
        let sig = Signature::parse(&read(sig_path)?).with_context(|| format!("parsing {}", sig_path.display()))?;
        if sig != m.signature {
            return Err(Error::SignatureMismatch).with_context(|| format!("{} against {}", path.display(), sig_path.display()));
        }
    }
    Ok(m)
}

fn dataset_path(cli: &Cli) -> Result<&Path> {
    cli.global.dataset.as_deref().ok_or_else(|| anyhow!("--dataset is required"))
}

fn load_dataset(cli: &Cli, sig: &Signature) -> Result<Dataset> {
    let path = dataset_path(cli)?;
    Dataset::parse_with_signature(&read(path)?, sig).with_context(|| format!("parsing {}", path.display()))
}

fn load_rules(file: Option<&Path>, inline: Option<&str>) -> Result<Vec<Rule>> {
    match (file, inline) {
        (_, Some(text)) => Ok(vec![parse_rule(text)?]),
        (Some(path), None) => parse_rules(&read(path)?).with_context(|| format!("parsing {}", path.display())),
        (None, None) => bail!("no rules given"),
    }
}

/// Rendered output of a command and its exit code.
struct Output {
    plain: String,
    json: Value,
    code: u8,
}

impl Output {
    fn ok(plain: String, json: Value) -> Self {
        Output { plain, json, code: 0 }
    }
}

pub fn run(cli: &Cli) -> Result<u8> {
    let out = match &cli.command {
        Command::Infer => infer(cli)?,
        Command::Extract { max_body_size, no_prune } => extract(cli, *max_body_size, !no_prune)?,
        Command::Check { rules, rule } => check(cli, load_rules(rules.as_deref(), rule.as_deref())?)?,
        Command::Explain {
            fact,
            all_true_positives,
            targets,
            prune_budget,
            relax,
        } => explain_cmd(cli, fact.as_deref(), *all_true_positives, targets.as_deref(), *prune_budget, *relax)?,
        Command::Fuzz {
            rules,
            rule,
            trials,
            max_constants,
            densities,
            keep,
            no_shrink,
        } => {
            let defaults = FuzzConfig::default();
            let cfg = FuzzConfig {
                trials: *trials,
                seed: cli.global.seed,
                max_constants: *max_constants,
                densities: if densities.is_empty() { defaults.densities } else { densities.clone() },
                keep: *keep,
                shrink: !no_shrink,
                jobs: cli.global.jobs,
            };
            if cfg.max_constants == 0 {
                bail!("--max-constants must be at least 1");
            }
            if let Some(bad) = cfg.densities.iter().find(|d| !(0.0..=1.0).contains(*d)) {
                bail!("density {bad} is outside [0, 1]");
            }
            fuzz(cli, load_rules(rules.as_deref(), rule.as_deref())?, &cfg)?
        }
        Command::LpEncode { all_pairs, signature_out } => lp_encode_cmd(cli, *all_pairs, signature_out.as_deref())?,
        Command::LpUnfold { rules, max_body_size } => lp_unfold(cli, rules.as_deref(), *max_body_size)?,
        Command::Validate => validate(cli)?,
    };
    emit(cli, &out)?;
    Ok(out.code)
}

fn emit(cli: &Cli, out: &Output) -> Result<()> {
    let stamp = cli
        .global
        .timestamps
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let text = match cli.global.format {
        Format::Plain => {
            let mut s = String::new();
            if let Some(t) = stamp {
                let _ = writeln!(s, "# generated_at_unix {t}");
            }
            s.push_str(&out.plain);
            s
        }
        Format::Json => {
            let mut v = out.json.clone();
            if let (Some(t), Value::Object(map)) = (stamp, &mut v) {
                map.insert("generated_at_unix".into(), json!(t));
            }
            format!("{}\n", serde_json::to_string_pretty(&v)?)
        }
    };
    match &cli.global.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn facts_json(d: &Dataset) -> Value {
    json!(d.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn infer(cli: &Cli) -> Result<Output> {
    let m = load_model(cli)?;
    let d = load_dataset(cli, &m.signature)?;
    let out = apply(&m, &d)?;
    Ok(Output::ok(out.to_text(), json!({ "facts": facts_json(&out) })))
}

fn extract(cli: &Cli, max_body_size: usize, prune: bool) -> Result<Output> {
    let m = load_model(cli)?;
    let items = m.signature.delta() + m.signature.colours();
    if max_body_size > items {
        eprintln!("warning: --max-body-size {max_body_size} exceeds the {items} possible body atoms; using {items}");
    }
    let options = ExtractionOptions {
        max_body_size,
        prune,
        jobs: cli.global.jobs,
    };
    let report = enumerate_sound(&m, &options)?;
    Ok(Output::ok(report.to_text(), report.to_json()))
}

fn check(cli: &Cli, rules: Vec<Rule>) -> Result<Output> {
    let m = load_model(cli)?;
    let mut plain = String::new();
    let mut verdicts = Vec::new();
    for r in &rules {
        r.check_signature(&m.signature).with_context(|| format!("rule `{}`", r.to_text()))?;
        let (sound, kind, witness, reduced) = match RestrictedRule::from_rule(r) {
            Ok(rr) => {
                let v = check_restricted(&m, &rr)?;
                (v.sound, "restricted", v.witness, Vec::new())
            }
            Err(_) => {
                if let Err(e) = r.check_fragment(Fragment::Eluq) {
                    bail!("fragment violation in `{}`: {e}", r.to_text());
                }
                let v = check_eluq(&m, r)?;
                let failing = v.reduced.iter().find(|x| !x.sound).and_then(|x| x.witness.clone());
                let reduced: Vec<(String, bool)> = v.reduced.iter().map(|x| (x.rule.to_rule().to_text(), x.sound)).collect();
                (v.sound, "eluq", failing, reduced)
            }
        };
        let verdict = if sound { "sound" } else { "unsound" };
        let _ = write!(plain, "{verdict}\t{}", r.to_text());
        if let Some(w) = &witness {
            let _ = write!(plain, "\twitness {w}");
        }
        plain.push('\n');
        for (text, ok) in &reduced {
            let _ = writeln!(plain, "  {}\t{text}", if *ok { "sound" } else { "unsound" });
        }
        verdicts.push(json!({
            "rule": r.to_text(),
            "kind": kind,
            "sound": sound,
            "witness": witness.as_ref().map(facts_json),
            "reduced": reduced.iter().map(|(t, ok)| json!({ "rule": t, "sound": ok })).collect::<Vec<_>>(),
        }));
    }
    Ok(Output::ok(plain, json!({ "verdicts": verdicts })))
}

fn parse_fact(text: &str) -> Result<Fact> {
    text.parse::<Fact>().map_err(|e| anyhow!("invalid fact `{text}`: {e}"))
}

fn explain_cmd(
    cli: &Cli,
    fact: Option<&str>,
    all: bool,
    targets: Option<&Path>,
    budget: Option<usize>,
    relax: u32,
) -> Result<Output> {
    let m = load_model(cli)?;
    let d = load_dataset(cli, &m.signature)?;
    let facts: Vec<Fact> = if all {
        let path = targets.ok_or_else(|| anyhow!("--targets is required with --all-true-positives"))?;
        let wanted = Dataset::parse_with_signature(&read(path)?, &m.signature)
            .with_context(|| format!("parsing {}", path.display()))?;
        let predicted = apply(&m, &d)?;
        wanted.iter().filter(|f| predicted.contains(f)).cloned().collect()
    } else {
        vec![parse_fact(fact.unwrap_or_default())?]
    };
    let one = |f: &Fact| -> Result<Explanation> {
        let e = match budget {
            Some(b) => prune_explanation(&m, &d, f, b)?,
            None => explain(&m, &d, f)?,
        };
        Ok(relax_bounds(&m, &e, relax)?)
    };
    let explanations = facts.iter().map(one).collect::<Result<Vec<_>>>()?;
    let mut plain = String::new();
    for (i, e) in explanations.iter().enumerate() {
        if i > 0 {
            plain.push('\n');
        }
        plain.push_str(&e.to_text());
    }
    if all {
        let mean = if explanations.is_empty() {
            0.0
        } else {
            explanations.iter().map(|e| e.body_concept_count).sum::<usize>() as f64 / explanations.len() as f64
        };
        let _ = writeln!(plain, "# explained {} mean_body_concepts {mean:.2}", explanations.len());
    }
    let json = json!({ "explanations": explanations.iter().map(Explanation::to_json).collect::<Vec<_>>() });
    Ok(Output::ok(plain, json))
}

fn fuzz(cli: &Cli, rules: Vec<Rule>, cfg: &FuzzConfig) -> Result<Output> {
    let m = load_model(cli)?;
    let reports = fuzz_rules(&m, &rules, cfg)?;
    let violated = reports.iter().any(|r| r.violation_count > 0);
    let plain = reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n");
    let json = json!({ "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>() });
    Ok(Output {
        plain,
        json,
        code: u8::from(violated),
    })
}

fn lp_encode_cmd(cli: &Cli, all_pairs: bool, signature_out: Option<&Path>) -> Result<Output> {
    let path = dataset_path(cli)?;
    let d = Dataset::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let order = match &cli.global.signature {
        Some(p) => Some(Signature::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => None,
    };
    let enc = lp_encode(&d, order.as_ref().map(|s| s.binary()), all_pairs)?;
    if let Some(out) = signature_out {
        fs::write(out, enc.signature.to_text()).with_context(|| format!("writing {}", out.display()))?;
    }
    let json = json!({
        "signature": { "unary": enc.signature.unary(), "binary": enc.signature.binary() },
        "facts": facts_json(&enc.dataset),
        "pairs": enc.pairs.iter().map(|(k, (a, b))| (k.clone(), json!([a, b]))).collect::<serde_json::Map<_, _>>(),
    });
    Ok(Output::ok(enc.dataset.to_text(), json))
}

fn lp_unfold(cli: &Cli, rules: Option<&Path>, max_body_size: usize) -> Result<Output> {
    let m = load_model(cli)?;
    if m.signature.binary() != PAIR_COLOURS {
        bail!("the model is not over a pair signature (edge colours must be {})", PAIR_COLOURS.join(", "));
    }
    let restricted: Vec<RestrictedRule> = match rules {
        Some(path) => parse_rules(&read(path)?)?
            .iter()
            .map(|r| {
                r.check_signature(&m.signature)?;
                RestrictedRule::from_rule(r)
            })
            .collect::<magnn_core::Result<_>>()?,
        None => enumerate_sound(&m, &ExtractionOptions { jobs: cli.global.jobs, ..ExtractionOptions::new(max_body_size) })?.minimal_sound,
    };
    let mut plain = String::new();
    let mut items = Vec::new();
    for r in &restricted {
        let sound = check_restricted(&m, r)?.sound;
        let text = unfold(r).to_string();
        if sound {
            let _ = writeln!(plain, "{text}");
        } else {
            let _ = writeln!(plain, "# unsound, not unfolded: {}", r.to_rule().to_text());
        }
        items.push(json!({ "rule": r.to_rule().to_text(), "sound": sound, "unfolded": sound.then_some(text) }));
    }
    Ok(Output::ok(plain, json!({ "rules": items })))
}

fn validate(cli: &Cli) -> Result<Output> {
    let path = cli.global.model.as_deref().ok_or_else(|| anyhow!("--model is required"))?;
    let m = MagnnModel::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    let diagnostics = m.validate();
    let mut plain = String::new();
    if diagnostics.is_empty() {
        let _ = writeln!(plain, "valid: monotonic, {} layers, digest {}", m.depth(), m.digest());
    }
    for d in &diagnostics {
        let _ = writeln!(plain, "{d}");
    }
    let json = json!({
        "valid": diagnostics.is_empty(),
        "digest": m.digest(),
        "diagnostics": diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>(),
    });
    Ok(Output {
        plain,
        json,
        code: if diagnostics.is_empty() { 0 } else { 2 },
    })
}
