use sbm_lab::align::alignment_weight;
use sbm_lab::detection::{count_triangles, expected_triangles, TriangleModel};
use sbm_lab::sample::{sample_er, sample_sbm, sample_tilde_sbm};
use sbm_lab::{GraphSample, ModelParams};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn degrees(g: &GraphSample) -> Vec<usize> {
    (0..g.n()).map(|v| g.degree(v)).collect()
}

#[test]
fn mean_degree_matches_d() {
    let p = ModelParams::from_degree(20_000, 20, 6.0, 0.7).unwrap();
    let means: Vec<f64> = (0..20).map(|s| sample_sbm(&p, s).mean_degree()).collect();
    let (m, sd) = mean_sd(&means);
    // (n-1)/n correction: each vertex has n-1 potential neighbours.
    let target = 6.0 * (20_000.0 - 1.0) / 20_000.0;
    assert!((m - target).abs() < 4.0 * sd / (20f64).sqrt() + 1e-3, "{m} vs {target}");
}

#[test]
fn labels_are_uniform() {
    let p = ModelParams::from_degree(50_000, 25, 3.0, 0.5).unwrap();
    let g = sample_sbm(&p, 11);
    let sizes = g.truth.sizes();
    let e = 50_000.0 / 25.0;
    let stat: f64 = sizes.iter().map(|&s| (s as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new(24.0).unwrap().inverse_cdf(0.999);
    assert!(stat < crit, "{stat} >= {crit}");
}

fn ks_statistic(x: &[usize], y: &[usize]) -> f64 {
    let top = x.iter().chain(y).copied().max().unwrap_or(0);
    let cdf = |s: &[usize]| {
        let mut h = vec![0usize; top + 1];
        for &v in s {
            h[v] += 1;
        }
        let mut acc = 0usize;
        h.iter()
            .map(|c| {
                acc += c;
                acc as f64 / s.len() as f64
            })
            .collect::<Vec<_>>()
    };
    let (fx, fy) = (cdf(x), cdf(y));
    fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_signal_sbm_matches_er_degrees() {
    let (n, d) = (3000, 5.0);
    let p = ModelParams::from_degree(n, 30, d, 0.0).unwrap();
    let crit = (-(0.001f64 / 2.0).ln() / 2.0).sqrt() * (2.0 / n as f64).sqrt();
    let rejections = (0..100)
        .filter(|&t| {
            let a = degrees(&sample_sbm(&p, 1000 + t));
            let b = degrees(&sample_er(n, d, 5000 + t).unwrap());
            ks_statistic(&a, &b) > crit
        })
        .count();
    // At the 0.999 level about 0.1 of 100 trials reject by chance.
    assert!(rejections <= 1, "{rejections} rejections");
}

#[test]
fn tilde_edge_counts() {
    let sizes = [300, 200, 100];
    let (pa, pb) = (0.02, 0.004);
    let within: f64 = sizes.iter().map(|&s| (s * (s - 1) / 2) as f64).sum();
    let total = (600 * 599 / 2) as f64;
    let expect = within * pa + (total - within) * pb;
    let var = within * pa * (1.0 - pa) + (total - within) * pb * (1.0 - pb);
    let counts: Vec<f64> = (0..200).map(|s| sample_tilde_sbm(600, &sizes, pa, pb, s).unwrap().m() as f64).collect();
    let (m, _) = mean_sd(&counts);
    assert!((m - expect).abs() < 4.0 * (var / 200.0).sqrt(), "{m} vs {expect}");
    let g = sample_tilde_sbm(600, &sizes, pa, pb, 1).unwrap();
    assert_eq!(g.truth.sizes(), vec![300, 200, 100]);
}

#[test]
fn er_triangle_mean() {
    let p = ModelParams::from_degree(4000, 2, 6.0, 0.0).unwrap();
    let counts: Vec<f64> = (0..300).map(|s| count_triangles(&sample_er(4000, 6.0, s).unwrap()) as f64).collect();
    let (m, sd) = mean_sd(&counts);
    let e = expected_triangles(&p, TriangleModel::Er);
    assert!((m - e).abs() < 3.0 * sd / 300f64.sqrt(), "{m} vs {e}");
}

#[test]
fn sbm_triangle_means() {
    // Equal community sizes reproduce the equal-size formula; i.i.d. labels
    // reproduce the i.i.d. one.
    let p = ModelParams::from_degree(5000, 50, 5.0, 0.8).unwrap();
    let sizes = vec![100; 50];
    let equal: Vec<f64> =
        (0..200).map(|s| count_triangles(&sample_tilde_sbm(5000, &sizes, p.p_in(), p.p_out(), s).unwrap()) as f64).collect();
    let (m, sd) = mean_sd(&equal);
    let e = expected_triangles(&p, TriangleModel::Sbm);
    assert!((m - e).abs() < 3.0 * sd / 200f64.sqrt(), "equal sizes: {m} vs {e}");

    let iid: Vec<f64> = (0..200).map(|s| count_triangles(&sample_sbm(&p, 7000 + s)) as f64).collect();
    let (m, sd) = mean_sd(&iid);
    let e = expected_triangles(&p, TriangleModel::SbmIid);
    assert!((m - e).abs() < 3.0 * sd / 200f64.sqrt(), "iid labels: {m} vs {e}");
}

#[test]
fn alignment_weight_is_centered() {
    for q in 1..=12usize {
        let mut total = 0.0;
        for x in 0..q as u32 {
            for y in 0..q as u32 {
                total += alignment_weight(x, y, q);
            }
        }
        assert_eq!(total, 0.0);
    }
}

#[test]
fn text_round_trip_of_sampled_graph() {
    let p = ModelParams::from_degree(500, 7, 4.0, 0.6).unwrap();
    let g = sample_sbm(&p, 3);
    let back = GraphSample::read_text(g.to_text().as_bytes()).unwrap();
    assert_eq!(back.to_text(), g.to_text());
    assert_eq!(back.edges(), g.edges());
    assert_eq!(back.truth, g.truth);
}
