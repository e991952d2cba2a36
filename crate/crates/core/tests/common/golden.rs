use bgk::fieldlang::parse;
use bgk::Point;

pub fn golden_cases() -> Vec<(String, String, String, String)> {
    include_str!("../data/fieldlang_golden.tsv")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 4, "{l:?}");
            (cols[0].replace("\\n", "\n"), cols[1].to_string(), cols[2].to_string(), cols[3].to_string())
        })
        .collect()
}

/// Runs the golden file; returns the failing inputs.
pub fn golden_failures() -> Vec<String> {
    let x = Point::from_slice(&[0.3, -0.7, 1.1]);
    let mut bad = Vec::new();
    for (src, status, expect, value) in golden_cases() {
        let ok = match (parse(&src), status.as_str()) {
            (Ok(e), "ok") => {
                let want: f64 = value.parse().unwrap();
                let got = e.eval(&x).unwrap();
                e.to_string() == expect && (got - want).abs() <= 1e-14 * want.abs().max(1.0)
            }
            (Err(err), "err") => format!("{}:{}", err.line, err.col) == expect,
            _ => false,
        };
        if !ok {
            bad.push(src);
        }
    }
    bad
}
