use ddsrnet::checkpoint::{load_for_config, save_checkpoint};
use ddsrnet::data::{DatasetSpec, PreparedDataset, Split, SyntheticScene};
use ddsrnet::loss::{hybrid_loss, LossWeights};
use ddsrnet::model::init_params;
use ddsrnet::trainer::{evaluate, samples, train_dataset, TrainConfig};

fn dataset() -> PreparedDataset {
    // 16 x 368 strip: 23 patches of 16 x 16, split 20 / 2 / 1.
    let raw = SyntheticScene::new(35, 16, 368, 21).generate();
    PreparedDataset::prepare(&raw, &DatasetSpec::new(16, 2)).unwrap()
}

#[test]
fn split_sizes() {
    let d = dataset();
    assert_eq!((d.splits.train.len(), d.splits.val.len(), d.splits.test.len()), (20, 2, 1));
    assert_eq!(samples(&d, Split::Train, true).unwrap().len(), 20);
}

#[test]
fn fifty_epochs_halve_the_training_loss() {
    let d = dataset();
    let config = TrainConfig { max_epochs: 50, patience: 49, ..TrainConfig::default() };
    let out = train_dataset(&config, &d, |_| {}).unwrap();
    let (first, last) = (out.log.first_train_loss().unwrap(), out.log.last_train_loss().unwrap());
    assert!(last < 0.5 * first, "first {first:.3e}, last {last:.3e}");
    let mut best = f64::INFINITY;
    for e in &out.log.epochs {
        assert_eq!(e.best, e.val < best - config.min_improvement || best.is_infinite());
        best = best.min(e.val);
    }
    assert!(out.log.best_epoch <= out.log.epochs.len());
}

#[test]
fn checkpoint_reproduces_evaluation() {
    let d = dataset();
    let config = TrainConfig { max_epochs: 4, patience: 3, ..TrainConfig::default() }.for_dataset(&d);
    let out = train_dataset(&config, &d, |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&out.params, &path).unwrap();
    let back = load_for_config(&path, config.model).unwrap();
    assert_eq!(evaluate(&back, &d).unwrap(), evaluate(&out.params, &d).unwrap());
}

#[test]
fn hybrid_total_is_the_weighted_sum() {
    let d = dataset();
    let config = TrainConfig::default().for_dataset(&d);
    let params = init_params::<f64>(&config.model, 2).unwrap();
    let s = &samples(&d, Split::Test, true).unwrap()[0];
    let out = params.forward(&s.lr.cast()).unwrap();
    let l = hybrid_loss(&out, &s.hr.cast(), &LossWeights::default(), 1.0).unwrap();
    assert!(l.total > 0.0);
    let expected = 0.35 * (l.rec + l.spatial + l.low + l.high);
    assert!((l.total - expected).abs() < 1e-15);
}
