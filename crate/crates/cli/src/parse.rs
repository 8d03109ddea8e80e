//! Parsers for comma-separated flag values and flow specifications.

use std::collections::BTreeMap;

use fluidex::exponent::ClassRequest;

/// Parses `a,b,c` where each item is a finite real or a fraction `p/q`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty list".into());
    }
    s.split(',').map(|item| parse_real(item.trim())).collect()
}

/// A finite real, optionally written as a fraction `p/q`.
pub fn parse_real(item: &str) -> Result<f64, String> {
    if item.is_empty() {
        return Err("empty list item".into());
    }
    let v = match item.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("'{item}' is not a number"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("'{item}' is not a number"))?;
            if q == 0.0 {
                return Err(format!("'{item}' divides by zero"));
            }
            p / q
        }
        None => item.parse().map_err(|_| format!("'{item}' is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{item}' is not finite"))
    }
}

/// Parses `full,star2,f2`; duplicates are rejected.
pub fn parse_class_list(s: &str) -> Result<Vec<ClassRequest>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty class list".into());
    }
    let mut out: Vec<ClassRequest> = Vec::new();
    for item in s.split(',') {
        let c: ClassRequest = item.trim().parse().map_err(|e: fluidex::FluidexError| e.to_string())?;
        if out.contains(&c) {
            return Err(format!("class '{}' listed twice", item.trim()));
        }
        out.push(c);
    }
    Ok(out)
}

/// Parses `name` or `name:key=value,key=value`.
pub fn parse_flow_spec(s: &str) -> Result<(String, BTreeMap<String, f64>), String> {
    let s = s.trim();
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (s, None),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
        return Err(format!("invalid flow name '{name}'"));
    }
    let mut params = BTreeMap::new();
    if let Some(rest) = rest {
        for pair in rest.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("flow parameter '{}' is not of the form key=value", pair.trim()))?;
            let k = k.trim();
            if k.is_empty() {
                return Err("empty flow parameter name".into());
            }
            let v = parse_real(v.trim())?;
            if params.insert(k.to_string(), v).is_some() {
                return Err(format!("flow parameter '{k}' given twice"));
            }
        }
    }
    Ok((name.to_string(), params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fluidex::bas::ClassTag;

    #[test]
    fn lists() {
        assert_eq!(parse_f64_list("5, 10,20").unwrap(), vec![5.0, 10.0, 20.0]);
        assert_eq!(parse_f64_list("1/64,0.5").unwrap(), vec![1.0 / 64.0, 0.5]);
        assert!(parse_f64_list("").is_err());
        assert!(parse_f64_list("1,,2").is_err());
        assert!(parse_f64_list("inf").is_err());
        assert!(parse_f64_list("1/0").is_err());
        assert!(parse_f64_list("x").is_err());
    }

    #[test]
    fn classes() {
        let c = parse_class_list("full,star2,f2").unwrap();
        assert_eq!(c, vec![ClassRequest::Tag(ClassTag::Full), ClassRequest::Tag(ClassTag::Star2), ClassRequest::F2]);
        assert!(parse_class_list("full,full").is_err());
        assert!(parse_class_list("f4").unwrap_err().contains("unknown class"));
    }

    #[test]
    fn flow_specs() {
        let (n, p) = parse_flow_spec("abc:a=1,b=0.5, c=2").unwrap();
        assert_eq!(n, "abc");
        assert_eq!(p["b"], 0.5);
        assert_eq!(parse_flow_spec("cellular").unwrap().1.len(), 0);
        assert!(parse_flow_spec("abc:a").is_err());
        assert!(parse_flow_spec("abc:a=1,a=2").is_err());
        assert!(parse_flow_spec("Bad Name").is_err());
    }
}
