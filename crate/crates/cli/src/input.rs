//! Parsing of command-line values: states, boxes, reaction lists.

use anyhow::{anyhow, bail, Context, Result};
use crn_core::parse::parse_complex;
use crn_core::{ReactionId, ReactionNetwork, State};

fn species_names(net: &ReactionNetwork) -> Vec<String> {
    net.species().iter().map(|s| s.name.clone()).collect()
}

/// `3,1,0` (parentheses and spaces allowed).
pub fn state(text: &str, net: &ReactionNetwork) -> Result<State> {
    let body = text.trim().trim_start_matches('(').trim_end_matches(')');
    let counts = body
        .split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad count `{}` in state `{text}`", t.trim())))
        .collect::<Result<Vec<_>>>()?;
    if counts.len() != net.dim() {
        bail!("state `{text}` has {} coordinates, the network has {} species", counts.len(), net.dim());
    }
    Ok(State::new(counts)?)
}

/// `0..40` or `0..2,0..3`: inclusive ranges per species; a single range
/// applies to every species.
pub fn region_box(text: &str, net: &ReactionNetwork) -> Result<Vec<State>> {
    let ranges = text
        .split(',')
        .map(|r| {
            let (a, b) = r.trim().split_once("..").ok_or_else(|| anyhow!("expected `lo..hi`, got `{r}`"))?;
            let lo: u64 = a.trim().parse().with_context(|| format!("bad bound in `{r}`"))?;
            let hi: u64 = b.trim().trim_start_matches('=').parse().with_context(|| format!("bad bound in `{r}`"))?;
            if lo > hi {
                bail!("empty range `{r}`");
            }
            Ok((lo, hi))
        })
        .collect::<Result<Vec<_>>>()?;
    let ranges = match ranges.len() {
        1 => vec![ranges[0]; net.dim()],
        n if n == net.dim() => ranges,
        n => bail!("region has {n} ranges, the network has {} species", net.dim()),
    };
    let size = ranges.iter().try_fold(1u64, |acc, (lo, hi)| acc.checked_mul(hi - lo + 1));
    match size {
        Some(s) if s <= 2_000_000 => {}
        _ => bail!("region `{text}` has more than 2000000 states"),
    }
    let mut out = vec![Vec::new()];
    for (lo, hi) in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u64>| {
                (lo..=hi).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(|c| Ok(State::new(c)?)).collect()
}

/// `A->A+B, A+B->A+C`.
pub fn reaction_list(text: &str, net: &ReactionNetwork) -> Result<Vec<ReactionId>> {
    let names = species_names(net);
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|item| {
            let (a, b) = item.split_once("->").ok_or_else(|| anyhow!("expected `source->product`, got `{item}`"))?;
            let src = parse_complex(a, &names).map_err(|e| anyhow!("in `{item}`: {}", e.message))?;
            let prod = parse_complex(b, &names).map_err(|e| anyhow!("in `{item}`: {}", e.message))?;
            net.reaction_index(&src, &prod).ok_or_else(|| anyhow!("no reaction `{item}` in the network"))
        })
        .collect()
}

/// `<sequence spec>:<n list>`, e.g. `A=n,B=1,C=0:10,100,1000`.
pub fn along(text: &str) -> Result<(&str, Vec<u64>)> {
    let (seq, ns) = text.rsplit_once(':').ok_or_else(|| anyhow!("expected `<sequence>:<n list>`"))?;
    let ns = ns
        .split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad n `{}`", t.trim())))
        .collect::<Result<Vec<_>>>()?;
    if ns.is_empty() {
        bail!("empty n list");
    }
    Ok((seq, ns))
}
