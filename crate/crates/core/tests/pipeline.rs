use ensemble_forecast::backtest::WindowPlan;
use ensemble_forecast::collinearity::decollinearize;
use ensemble_forecast::datagen::{generate, SynthConfig};
use ensemble_forecast::dataset::CalendarConfig;
use ensemble_forecast::ensemble::{ensemble_predict, search, EnsembleModel, SearchConfig};
use ensemble_forecast::features::FeatureConfig;
use ensemble_forecast::learners::LearnerKind;
use ensemble_forecast::FeatureTable;

fn table(lead: u32) -> FeatureTable {
    let synth = SynthConfig {
        seed: 5,
        ..SynthConfig::default()
    };
    let calendar = CalendarConfig::default().build(synth.n_years).unwrap();
    let feeds = generate(&synth, &calendar).unwrap();
    feeds.table("DT", lead, &FeatureConfig::default()).unwrap()
}

fn last_target(t: &FeatureTable) -> u32 {
    (0..t.n_rows()).map(|i| t.target_week(i)).max().unwrap()
}

fn small_search(workers: usize) -> SearchConfig {
    let mut config = SearchConfig::default();
    config.subsets.k_max = 3;
    config.subsets.cap = 30;
    config.subsets.seed = 9;
    config.workers = workers;
    config
}

#[test]
fn window_rows_never_reach_past_the_origin() {
    let t = table(5);
    let plan = WindowPlan::new(last_target(&t), 5, 104, 52).unwrap();
    let train = plan.train_rows(&t);
    let val = plan.val_rows(&t);
    assert_eq!(train.n_rows(), 104);
    let val_last = (0..val.n_rows()).map(|i| val.target_week(i)).max().unwrap();
    assert!(val_last <= plan.origin());
    let train_last = (0..train.n_rows()).map(|i| train.target_week(i)).max().unwrap();
    let val_first = (0..val.n_rows()).map(|i| val.target_week(i)).min().unwrap();
    assert!(train_last < val_first);
    assert_eq!(plan.test_rows(&t).n_rows(), 1);
}

#[test]
fn reduce_then_search_gives_a_usable_ensemble() {
    let t = table(1);
    let plan = WindowPlan::new(last_target(&t), 1, 104, 52).unwrap();
    let fit = plan.train_rows(&t);
    let report = decollinearize(&fit, 0.8, 3, true).unwrap();
    assert!(report.selected.len() < t.columns().len());
    let reduced = t.select_columns(&report.selected).unwrap();

    let fit = plan.train_rows(&reduced);
    let val = plan.val_rows(&reduced);
    let vars = reduced.column_names();
    let one = search(LearnerKind::Mlr, &vars, &fit, &[&val], &small_search(1), 4, "w").unwrap();
    let two = search(LearnerKind::Mlr, &vars, &fit, &[&val], &small_search(2), 4, "w").unwrap();
    assert_eq!(one.ensemble.to_json(), two.ensemble.to_json());

    let ens = one.ensemble;
    assert!(ens.m >= 1 && ens.m <= one.evaluation.ranked.len());
    let test = plan.test_rows(&reduced);
    let pred = ensemble_predict(&ens, &test).unwrap();
    assert!(pred.iter().all(|p| p.is_finite()));

    let back = EnsembleModel::from_json(&ens.to_json()).unwrap();
    assert_eq!(ensemble_predict(&back, &test).unwrap(), pred);
}
