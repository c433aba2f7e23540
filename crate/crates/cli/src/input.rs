use anyhow::{anyhow, bail, Context, Result};
use siegel_core::cf_arith::{cf_expand, omega_of_theta, BigAngle, ContinuedFraction};

/// Entries kept when a decimal is turned into a continued fraction.
pub const DECIMAL_CF_ENTRIES: usize = 40;

/// `cf:a1,a2,…` where any entry may be a run `KxN`, or a decimal in (0,1). The second value is a warning
/// for decimal input.
pub fn parse_theta(s: &str) -> Result<(ContinuedFraction, Option<String>)> {
    let s = s.trim();
    if let Some(body) = s.strip_prefix("cf:") {
        let mut entries = Vec::new();
        for tok in body.split(',') {
            let tok = tok.trim();
            let (k, n) = tok.split_once(['x', 'X']).unwrap_or((tok, "1"));
            let k: u64 = k.trim().parse().with_context(|| format!("bad entry {tok:?} in {s}"))?;
            let n: usize = n.trim().parse().with_context(|| format!("bad count {tok:?} in {s}"))?;
            entries.extend(std::iter::repeat_n(k, n));
        }
        return Ok((ContinuedFraction::new(entries)?, None));
    }
    let x: f64 = s.parse().with_context(|| format!("{s:?} is neither cf:… nor a decimal"))?;
    let cf = cf_expand(x, DECIMAL_CF_ENTRIES)?;
    let warning = format!(
        "decimal {x} truncated to the continued fraction {:?}; pass cf:… for exact input",
        cf.entries()
    );
    Ok((cf, Some(warning)))
}

/// Angles: `p/q`, a decimal, `omega`, `omega/2` or `omega+1/2`.
pub fn parse_angle(s: &str, theta: &ContinuedFraction, bits: u32) -> Result<BigAngle> {
    let s = s.trim();
    let omega = || omega_of_theta(theta, bits).map_err(|e| anyhow!(e));
    match s {
        "omega" => return omega(),
        "omega/2" => return Ok(omega()?.halves().0),
        "omega+1/2" | "(omega+1)/2" => return Ok(omega()?.halves().1),
        _ => {}
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: u64 = p.trim().parse().with_context(|| format!("bad numerator in {s}"))?;
        let q: u64 = q.trim().parse().with_context(|| format!("bad denominator in {s}"))?;
        return Ok(BigAngle::from_ratio(p, q, bits)?);
    }
    let x: f64 = s.parse().with_context(|| format!("cannot read angle {s:?}"))?;
    if !(0.0..1.0).contains(&x) {
        bail!("angle {x} outside [0,1)");
    }
    Ok(BigAngle::from_f64(x, bits)?)
}

pub fn parse_viewport(s: &str) -> Result<[f64; 4]> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad viewport entry {x:?}")))
        .collect::<Result<Vec<_>>>()?;
    match v[..] {
        [a, b, c, d] => Ok([a, b, c, d]),
        _ => bail!("viewport needs re0,im0,re1,im1"),
    }
}
