use newsvendor_core::trainer::run_returning_agent;
use newsvendor_core::{
    run_experiment, write_report, Day, DemandDistribution, EconomicParams, EnvConfig,
    ExperimentConfigFile, Td3Agent, TrainConfig,
};

fn small_env() -> EnvConfig {
    EnvConfig {
        episode_length: 14,
        ..EnvConfig::uniform_week(
            DemandDistribution::normal(50.0, 20.0).unwrap(),
            EconomicParams::new(2.0, 5.0).unwrap(),
        )
    }
}

fn small_file() -> ExperimentConfigFile {
    let mut file = ExperimentConfigFile::from_json(&format!(
        r#"{{"env": {}, "train": {{"total_episodes": 20, "priming_end_timestep": 100, "eval_start_timestep": 210}}, "seeds": [3, 1, 2]}}"#,
        serde_json::to_string(&small_env()).unwrap()
    ))
    .unwrap();
    file.agent.batch_size = 16;
    file.agent.actor_hidden = vec![8];
    file.agent.critic_hidden = vec![8];
    file
}

#[test]
fn median_summary_matches_per_seed_files() {
    let file = small_file();
    let report = run_experiment(&file, |_, _| {}).unwrap();
    assert_eq!(
        report
            .runs
            .iter()
            .map(|r| r.config.seed)
            .collect::<Vec<_>>(),
        vec![3, 1, 2]
    );
    let dir = tempfile::tempdir().unwrap();
    write_report(dir.path(), &file, &report).unwrap();

    let mut per_day = vec![Vec::new(); 7];
    for seed in [1, 2, 3] {
        let mut rdr =
            csv::Reader::from_path(dir.path().join(format!("seed_{seed}/eval_actions.csv")))
                .unwrap();
        for rec in rdr.records() {
            let rec = rec.unwrap();
            per_day[rec[0].parse::<usize>().unwrap()].push(rec[1].parse::<f64>().unwrap());
        }
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("median_summary.csv")).unwrap();
    for (day, rec) in rdr.records().enumerate() {
        let rec = rec.unwrap();
        let mut xs = per_day[day].clone();
        xs.sort_by(f64::total_cmp);
        assert_eq!(rec[1].parse::<f64>().unwrap(), xs[1]);
        assert_eq!(rec[2].parse::<f64>().unwrap(), xs[0]);
        assert_eq!(rec[3].parse::<f64>().unwrap(), xs[2]);
    }
}

#[test]
fn checkpoint_preserves_trained_policy() {
    let mut cfg = TrainConfig::reference_defaults(small_env(), 5);
    cfg.total_episodes = 20;
    cfg.priming_end = 100;
    cfg.eval_start = 210;
    cfg.hyper.batch_size = 16;
    let (metrics, agent) = run_returning_agent(&cfg).unwrap();
    let restored = Td3Agent::from_json(&agent.to_json().unwrap()).unwrap();
    for day in Day::all() {
        assert_eq!(
            restored.policy_action(day).to_bits(),
            agent.policy_action(day).to_bits()
        );
        assert!(metrics.eval_actions[day.index()]
            .iter()
            .all(|&a| a == agent.policy_action(day)));
    }
    assert_eq!(restored.update_counter(), agent.update_counter());
}
