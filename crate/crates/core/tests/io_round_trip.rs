use proptest::prelude::*;
use woodbury_ls::io::{
    parse_bench_csv, parse_matrix, read_bench_csv, read_matrix, write_bench_csv, write_matrix,
    BenchRecord, IoError,
};
use woodbury_ls::Matrix;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
    ]
}

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
        prop::collection::vec(finite(), r * c)
            .prop_map(move |data| Matrix::from_col_major(r, c, data).unwrap())
    })
}

fn record() -> impl Strategy<Value = BenchRecord> {
    (
        (
            1usize..1_000_000,
            1usize..10_000,
            1usize..100,
            0usize..100,
            any::<u64>(),
        ),
        (any::<u64>(), any::<u64>(), finite(), finite()),
    )
        .prop_map(
            |((m, n, r, rep, seed), (ts, tw, speedup, err))| BenchRecord {
                m,
                n,
                r,
                rep,
                seed,
                t_scratch_ns: ts,
                t_woodbury_ns: tw,
                speedup,
                rel_forward_error: err,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matrix_market_is_bit_exact(m in matrix()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix(&path, &m).unwrap();
        let back: Matrix = read_matrix(&path).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (x, y) in back.as_slice().iter().zip(m.as_slice()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn bench_csv_is_exact(records in prop::collection::vec(record(), 1..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        write_bench_csv(&path, &records).unwrap();
        prop_assert_eq!(read_bench_csv(&path).unwrap(), records);
    }
}

#[test]
fn frozen_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    write_bench_csv(&path, &[BenchRecord::new(10, 5, 1, 0, 3, 100, 10, 1e-16)]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "m,n,r,rep,seed,t_scratch_ns,t_woodbury_ns,speedup,rel_forward_error"
    );
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn reordered_csv_columns_are_rejected() {
    let text =
        "n,m,r,rep,seed,t_scratch_ns,t_woodbury_ns,speedup,rel_forward_error\n1,1,1,0,0,1,1,1,0\n";
    assert!(matches!(
        parse_bench_csv(text.as_bytes()),
        Err(IoError::MalformedHeader(_))
    ));
}

#[test]
fn f32_matrices_read_from_f64_text() {
    let text = "%%MatrixMarket matrix array real general\n1 2\n0.5\n-2.25\n";
    let m: woodbury_ls::Matrix32 = parse_matrix(text.as_bytes()).unwrap();
    assert_eq!(m.as_slice(), &[0.5f32, -2.25]);
}
