use std::path::PathBuf;
use std::process::Command;

use nilflow::analyze::analyze;
use nilflow::schema::{build, parse_system, parse_system_str, SystemFile};
use nilflow::CliError;
use nilflow_core::ratcore::rat;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn nilflow(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nilflow")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn tmp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nilflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const IDENTITY3: &str = r#"[["1","0","0"],["0","1","0"],["0","0","1"]]"#;

#[test]
fn fixtures_parse_to_the_expected_systems() {
    let h = parse_system(&fixture_path("heisenberg.json")).unwrap();
    assert_eq!(h.dim(), 3);
    assert_eq!(h.algebra().layer_dims(), &[2, 1]);
    assert_eq!(*h.map.matrix().get(0, 1), rat(2, 1));
    assert_eq!(*h.map.matrix().get(2, 2), rat(4, 1));

    let f = parse_system(&fixture_path("example5d.json")).unwrap();
    assert_eq!(f.algebra().layer_dims(), &[3, 2]);
    assert_eq!(f.algebra().structure_constants().len(), 2);
    assert_eq!(*f.map.matrix().get(1, 2), rat(1, 1));
}

#[test]
fn round_trip_preserves_exact_rationals() {
    let text = r#"{"name":"q","dimension":3,"structure_constants":[[2,1,3,"-3/6"]],
        "automorphism":[["2","0","0"],["0","1/2","0"],["0","0","1"]]}"#;
    let def = parse_system_str(text).unwrap();
    let again = parse_system_str(&def.to_json()).unwrap();
    assert_eq!(def.algebra().structure_constants(), again.algebra().structure_constants());
    assert_eq!(def.map.matrix(), again.map.matrix());
    assert_eq!(def.algebra().structure_constants()[0].3, rat(1, 2));
    assert!(def.to_json().contains("\"1/2\""));

    for name in ["heisenberg.json", "example5d.json", "torus2.json", "cat.json"] {
        let def = parse_system(&fixture_path(name)).unwrap();
        let file: SystemFile = serde_json::from_str(&def.to_json()).unwrap();
        let back = build(file.clone()).unwrap();
        assert_eq!(back.to_file(), file);
        assert_eq!(back.map.matrix(), def.map.matrix());
    }
}

#[test]
fn antisymmetry_violation_is_diagnosed() {
    let text = format!(
        r#"{{"name":"bad","dimension":3,"structure_constants":[[1,2,3,"1"],[2,1,3,"1"]],"automorphism":{IDENTITY3}}}"#
    );
    let err = parse_system_str(&text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("antisymmetry"), "{err}");
    assert!(err.to_string().contains("c[2,1]^3 = 1"), "{err}");
}

#[test]
fn jacobi_failure_names_the_triple() {
    let text = r#"{"name":"j","dimension":4,
        "structure_constants":[[1,2,3,"1"],[2,3,4,"1"],[1,3,4,"1"],[1,4,3,"1"]],
        "automorphism":[["1","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]]}"#;
    let err = parse_system_str(text).unwrap_err();
    assert!(err.to_string().contains("Jacobi"), "{err}");
    assert!(err.to_string().contains("(X1, X2, X3)"), "{err}");
}

#[test]
fn syntax_and_schema_errors_are_located() {
    let err = parse_system_str("{\"name\": \"x\",\n  \"dimension\": 3,,}").unwrap_err();
    assert!(matches!(err, CliError::Parse(_)));
    assert!(err.to_string().contains("line 2"), "{err}");

    let err = parse_system_str(r#"{"name":"x","dimension":3,"automorphism":[["1","0"],[1]]}"#).unwrap_err();
    assert!(err.to_string().contains("automorphism[1][0]"), "{err}");

    let text = format!(r#"{{"name":"x","dimension":3,"automorphism":{IDENTITY3},"bogus":1}}"#);
    assert!(parse_system_str(&text).unwrap_err().to_string().contains("bogus"));

    let text = r#"{"name":"x","dimension":2,"automorphism":[["1","x"],["0","1"]]}"#;
    let err = parse_system_str(text).unwrap_err();
    assert!(err.to_string().contains("automorphism[0][1]"), "{err}");

    let text = format!(r#"{{"name":"x","dimension":3,"structure_constants":[[1,2,4,"1"]],"automorphism":{IDENTITY3}}}"#);
    assert!(parse_system_str(&text).unwrap_err().to_string().contains("structure_constants[0][2]"));
}

#[test]
fn non_automorphisms_are_rejected() {
    // [ψX1, ψX2] = 2 X3 but ψX3 = X3.
    let text = r#"{"name":"x","dimension":3,"structure_constants":[[1,2,3,"1"]],
        "automorphism":[["2","0","0"],["0","1","0"],["0","0","1"]]}"#;
    let err = parse_system_str(text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("automorphism"), "{err}");
}

#[test]
fn torus_diag_two_predicates() {
    let def = parse_system(&fixture_path("torus2.json")).unwrap();
    let r = analyze(&def, 1).unwrap();
    assert!(r.totally_non_invertible);
    assert!(!r.horizontally_irreducible);
    assert_eq!(r.hyperbolic, Some(true));
    assert!(r.lambda_s().is_none());
}

#[test]
fn analyze_prints_the_predicates() {
    let path = fixture_path("heisenberg.json");
    let (code, out, _) = nilflow(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    for line in [
        "hyperbolic: true",
        "totally non-invertible: true",
        "horizontally irreducible: true",
        "u-ideal: true",
        "stable dim: 1",
        "lambda^s: -0.26927646955",
    ] {
        assert!(out.contains(line), "missing {line:?} in\n{out}");
    }
}

#[test]
fn density_writes_csv() {
    let path = fixture_path("torus2.json");
    let csv = std::env::temp_dir().join(format!("nilflow-density-{}.csv", std::process::id()));
    let (code, _, err) = nilflow(&[
        "density",
        path.to_str().unwrap(),
        "--k-max",
        "3",
        "--grid",
        "32",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,count,covering_radius,ratio");
    assert!(lines[1].starts_with("1,4,"));
    assert!(lines[3].starts_with("3,64,"));
    assert!(lines[4].starts_with("fitted_mu,"));
}

#[test]
fn exit_codes() {
    assert_eq!(nilflow(&["--help"]).0, 0);
    assert_eq!(nilflow(&["--version"]).0, 0);
    assert_eq!(nilflow(&[]).0, 1);
    assert_eq!(nilflow(&["frobnicate"]).0, 1);
    assert_eq!(nilflow(&["density", "x.json", "--k-max", "two"]).0, 1);

    assert_eq!(nilflow(&["analyze", "/nonexistent/system.json"]).0, 2);
    let bad = tmp("syntax.json", "{ not json");
    assert_eq!(nilflow(&["analyze", bad.to_str().unwrap()]).0, 2);

    let heis = fixture_path("heisenberg.json");
    let h = heis.to_str().unwrap();
    // Too large to keep the map Anosov.
    let (code, _, err) = nilflow(&["dynamics", h, "periodic", "--eps", "0.5", "--period-max", "1"]);
    assert_eq!(code, 2, "{err}");
    // Two sweeps cannot reach the tolerance.
    let (code, out, _) = nilflow(&["dynamics", h, "conjugacy", "--max-sweeps", "2", "--grid", "9"]);
    assert_eq!(code, 3);
    assert!(out.contains("converged: false"));
}

#[test]
fn dynamics_subcommands_emit_their_tables() {
    let heis = fixture_path("heisenberg.json");
    let h = heis.to_str().unwrap();
    let csv = std::env::temp_dir().join(format!("nilflow-periodic-{}.csv", std::process::id()));
    let (code, out, err) =
        nilflow(&["dynamics", h, "periodic", "--period-max", "2", "--eps", "0", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("period 2: 81 orbits"), "{out}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("period,t1,t2,t3,lambda_s,residual\n"));
    assert_eq!(text.lines().count(), 1 + 3 + 81);

    let (code, out, err) = nilflow(&[
        "dynamics", h, "rigidity", "--period-max", "2", "--kind", "conjugated", "--eps", "0.02", "--direction", "stable",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("spread"));

    let (code, out, err) = nilflow(&["dynamics", h, "conjugacy", "--grid", "9", "--threads", "1"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("converged: true"));
}
