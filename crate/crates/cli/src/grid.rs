use crate::error::{CliError, Result};

/// Parses `min:max:count` into `count` log-spaced values from `min` to `max`.
pub fn parse_log_grid(spec: &str) -> Result<Vec<f64>> {
    let usage = |why: &str| CliError::Usage(format!("bad grid `{spec}`: {why}; expected min:max:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(usage("wrong number of fields"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| usage("min is not a number"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| usage("max is not a number"))?;
    let count: usize = count.trim().parse().map_err(|_| usage("count is not an integer"))?;
    if count == 0 {
        return Err(usage("the grid is empty"));
    }
    if !(lo.is_finite() && lo > 0.0 && hi.is_finite() && hi >= lo) {
        return Err(usage("need 0 < min <= max"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| match i {
            0 => lo,
            _ if i == count - 1 => hi,
            _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let g = parse_log_grid("1e2:1e5:50").unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!((g[0], g[49]), (100.0, 1e5));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_point() {
        assert_eq!(parse_log_grid("3:10:1").unwrap(), vec![3.0]);
    }

    #[test]
    fn rejects_bad_specs() {
        for s in ["1:2:0", "1:2", "0:5:3", "5:1:3", "a:2:3", "1:2:x"] {
            assert!(parse_log_grid(s).is_err(), "{s}");
        }
    }
}
