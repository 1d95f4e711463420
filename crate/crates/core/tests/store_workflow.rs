use std::fs;

use defectdep_core::decimal::ratio;
use defectdep_core::store::{DefectReport, DefectStatus, ModelStore};
use defectdep_core::workflow::{evaluate, rank_version, recompute_all, RecomputeOptions};
use defectdep_testkit::fixtures_dir;

fn load_stock_exchange(store: &mut ModelStore, version: &str) {
    let dir = fixtures_dir().join("stock_exchange");
    let product = fs::read(dir.join("product.istarml")).unwrap();
    store.put_model(&product, version).unwrap();
    let mut files: Vec<_> = fs::read_dir(dir.join("defects"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for path in files {
        let report: DefectReport = toml::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        store.put_defect(report).unwrap();
    }
}

/// The fixture plus an audit actor pair linked only to each other.
fn grown_product() -> Vec<u8> {
    let text = fs::read_to_string(fixtures_dir().join("stock_exchange/product.istarml")).unwrap();
    let extra = r#"<ielement type="task" id="audit_trail" name="Audit Trail"/>
<actor type="role" id="auditor" name="Auditor">
<dependency>
<depender iref="audit_trail" aref="auditor"/>
<dependee iref="audit_trail" aref="audit_log"/>
</dependency>
</actor>
<actor type="agent" id="audit_log" name="Audit Log"/>
</diagram>"#;
    text.replace("</diagram>", extra).into_bytes()
}

#[test]
fn stock_exchange_values_by_hand() {
    // product: 8 actors, 8 dependee and 8 depender entries -> b = 8·16 = 128
    // #01 stock_portfolio: 5 actors, 4 links -> a = 5·8 = 40
    // #02 stock_bi + trend_analyzer: 4 actors, 3 links -> a = 4·6 = 24
    // #03 credit_payment: 4 actors, 3 links -> a = 24
    let dir = tempfile::tempdir().unwrap();
    let mut store = ModelStore::open(dir.path()).unwrap();
    load_stock_exchange(&mut store, "v1");
    for (id, a) in [("Defect #01", 40), ("Defect #02", 24), ("Defect #03", 24)] {
        let eval = evaluate(&store, id, "v1").unwrap();
        assert_eq!((eval.result.a, eval.result.b), (a, 128), "{id}");
        assert_eq!(eval.result.d, ratio(a, 128));
    }
    // default weights: D/2 + 3/10·s/3 + 1/5·c/2
    //   #01 0.15625 + 0.2 + 0.1 = 0.45625
    //   #02 0.09375 + 0.3 + 0.2 = 0.59375
    //   #03 0.09375 + 0.2 + 0.2 = 0.49375
    let ranking = rank_version(&store, "v1", &store.priority_config()).unwrap();
    let order: Vec<_> = ranking.rows.iter().map(|r| r.defect_id.as_str()).collect();
    assert_eq!(order, ["Defect #02", "Defect #03", "Defect #01"]);
    let scores: Vec<_> = ranking.rows.iter().map(|r| r.score.clone()).collect();
    assert_eq!(scores, [ratio(59375, 100000), ratio(49375, 100000), ratio(45625, 100000)]);
}

#[test]
fn growth_outside_the_flow_lowers_d_and_keeps_history() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = ModelStore::open(dir.path()).unwrap();
    load_stock_exchange(&mut store, "v1");
    let first = recompute_all(&mut store, "v1", RecomputeOptions::default()).unwrap();
    store.put_model(&grown_product(), "v2").unwrap();
    let second = recompute_all(&mut store, "v2", RecomputeOptions::default()).unwrap();

    for (before, after) in first.iter().zip(&second) {
        let old = before.result.as_ref().unwrap();
        let new = after.result.as_ref().unwrap();
        assert_eq!(old.a, new.a, "{}", before.defect_id);
        assert!(new.b > old.b);
        assert!(new.d < old.d, "{}", before.defect_id);
        assert_eq!(after.previous.as_ref(), Some(old));
    }

    let history = store.get_results("Defect #01").unwrap();
    let versions: Vec<_> = history.iter().map(|r| r.product_version.as_str()).collect();
    assert_eq!(versions, ["v2", "v1"]);
    // b = 10·(9+9) = 180
    assert_eq!(history[0].d, ratio(40, 180));

    let digest = store.digest().unwrap();
    drop(store);
    let reopened = ModelStore::open(dir.path()).unwrap();
    assert_eq!(reopened.digest().unwrap(), digest);
    assert_eq!(reopened.get_results("Defect #01").unwrap().len(), 2);
}

#[test]
fn fixed_and_closed_defects_are_skipped_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = ModelStore::open(dir.path()).unwrap();
    load_stock_exchange(&mut store, "v1");
    store.set_defect_status("Defect #01", DefectStatus::Fixed).unwrap();
    store.set_defect_status("Defect #03", DefectStatus::Closed).unwrap();
    let open_only = recompute_all(&mut store, "v1", RecomputeOptions::default()).unwrap();
    assert_eq!(open_only.len(), 1);
    let with_fixed =
        recompute_all(&mut store, "v1", RecomputeOptions { include_fixed: true }).unwrap();
    let ids: Vec<_> = with_fixed.iter().map(|e| e.defect_id.as_str()).collect();
    assert_eq!(ids, ["Defect #01", "Defect #02"]);
}
