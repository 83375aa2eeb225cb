//! Parsers for the compact argument strings accepted on the command line.

use num_complex::Complex64;
use theta_bidiff::sot::SecondOrderIndex;
use theta_bidiff::Characteristic;

/// Parses a finite decimal number.
fn real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let v: f64 = t.parse().map_err(|_| format!("not a number: {t:?}"))?;
    if !v.is_finite() {
        return Err(format!("not finite: {t:?}"));
    }
    Ok(v)
}

/// `"re,im"` as one complex number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re, im] => Ok(Complex64::new(real(re)?, real(im)?)),
        _ => Err(format!("expected re,im but got {s:?}")),
    }
}

/// `"re,im;re,im;..."` as a point of `C^g`.
pub fn parse_z_list(s: &str) -> Result<Vec<Complex64>, String> {
    if s.trim().is_empty() {
        return Err("empty coordinate list".into());
    }
    s.split(';').map(parse_complex).collect()
}

/// A comma-separated list of exactly `n` reals.
pub fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s.split(',').map(real).collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

/// `"xmin,xmax,ymin,ymax"`.
pub fn parse_window(s: &str) -> Result<[f64; 4], String> {
    let v = parse_reals(s, 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

/// `"nx,ny"`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [nx, ny] = parts.as_slice() else {
        return Err(format!("expected nx,ny but got {s:?}"));
    };
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("not a grid size: {t:?}"));
    Ok((n(nx)?, n(ny)?))
}

/// A rational `"p/q"` or an integer `"p"`.
fn rational(s: &str) -> Result<(i64, i64), String> {
    let t = s.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: i64 = p.parse().map_err(|_| format!("bad numerator in {t:?}"))?;
    let q: i64 = q.parse().map_err(|_| format!("bad denominator in {t:?}"))?;
    if q == 0 || q == i64::MIN {
        return Err(format!("bad denominator in {t:?}"));
    }
    Ok((p, q))
}

/// Characteristic `"a_1 ... a_g,b_1 ... b_g"` with rational entries such as
/// `1/2`; genus one reads `"1/2,1/2"`.
pub fn parse_characteristic(s: &str) -> Result<Characteristic, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected a-part,b-part but got {s:?}"))?;
    let a: Vec<(i64, i64)> = a.split_whitespace().map(rational).collect::<Result<_, _>>()?;
    let b: Vec<(i64, i64)> = b.split_whitespace().map(rational).collect::<Result<_, _>>()?;
    if a.is_empty() || a.len() != b.len() {
        return Err("a and b parts need the same positive number of entries".into());
    }
    // common denominator per half
    let lcm = |v: &[(i64, i64)]| -> Result<i64, String> {
        v.iter().try_fold(1i64, |acc, &(_, q)| {
            let q = q.abs();
            let g = gcd(acc, q);
            (acc / g).checked_mul(q).ok_or_else(|| "denominator overflow".to_string())
        })
    };
    let scale = |v: &[(i64, i64)], d: i64| -> Result<Vec<i64>, String> {
        v.iter()
            .map(|&(p, q)| {
                let f = d / q.abs() * q.signum();
                p.checked_mul(f).ok_or_else(|| "numerator overflow".to_string())
            })
            .collect()
    };
    let (da, db) = (lcm(&a)?, lcm(&b)?);
    Characteristic::rational(&scale(&a, da)?, da, &scale(&b, db)?, db).map_err(|e| e.to_string())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs().max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Second-order index `"0,1/2,..."`.
pub fn parse_u(s: &str) -> Result<SecondOrderIndex, String> {
    let bits = s
        .split(',')
        .map(|t| match t.trim() {
            "0" => Ok(0u8),
            "1/2" => Ok(1u8),
            other => Err(format!("entries of u must be 0 or 1/2, got {other:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    SecondOrderIndex::new(bits).map_err(|e| e.to_string())
}
