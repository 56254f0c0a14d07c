use stayswitch::channel::{ChannelModel, DiscreteDistribution, MarkovChannel};
use stayswitch::congestion;
use stayswitch::policy::Action;
use stayswitch::sim::{
    baseline_policy, build_plan, equilibrium_loads, run, EquilibriumOptions, Mode, SimConfig, SimStats,
};

fn iid(d: DiscreteDistribution) -> ChannelModel {
    ChannelModel::Iid(d)
}

fn exponential_channels() -> Vec<ChannelModel> {
    [2.5, 1.0 / 0.6, 2.0, 1.0 / 0.3, 5.0]
        .iter()
        .map(|m| iid(DiscreteDistribution::discretize_exponential(*m, 5.0 * m, 200).unwrap()))
        .collect()
}

fn small_config() -> SimConfig {
    SimConfig { n_users: 10, arrival_rate: 0.3 * 5.0 / 42.0 / 10.0, horizon: 40_000.0, warmup: 4_000.0, ..SimConfig::default() }
}

fn assert_hygiene(s: &SimStats) {
    assert!(s.conserves_packets(), "{} != {} + {}", s.packets_generated, s.packets_delivered, s.packets_queued);
    assert_eq!(s.exclusivity_violations, 0);
    assert_eq!(s.revisit_violations, 0);
}

#[test]
fn single_user_saturated_throughput_follows_renewal_cycle() {
    let x0 = 10.0;
    let channels = vec![iid(DiscreteDistribution::degenerate(x0).unwrap())];
    let config = SimConfig { n_users: 1, arrival_rate: 1.0, horizon: 200_000.0, warmup: 1_000.0, ..SimConfig::default() };
    let plan = build_plan(&config, &channels, &[0.0]).unwrap();
    let s = run(&config, &channels, &plan).unwrap();
    let expected = x0 * 40.0 / 42.0;
    assert!((s.throughput / expected - 1.0).abs() < 0.01, "{} vs {expected}", s.throughput);
    assert!((s.data_rate / expected - 1.0).abs() < 0.01);
    assert_eq!(s.decision_count(Action::Stay), 0);
    assert_hygiene(&s);
}

#[test]
fn lone_arrival_on_idle_channel_wins_at_once() {
    // one packet every 1000 units: every access is a single uncontested RTS
    let channels = vec![iid(DiscreteDistribution::degenerate(3.0).unwrap())];
    let config = SimConfig { n_users: 1, arrival_rate: 0.001, horizon: 500_000.0, warmup: 0.0, ..SimConfig::default() };
    let plan = build_plan(&config, &channels, &[0.0]).unwrap();
    let s = run(&config, &channels, &plan).unwrap();
    assert_eq!(s.attempts, s.successful_attempts);
    assert!((s.switching_delays[0] - congestion::HANDSHAKE_TIME).abs() < 1e-9);
}

#[test]
fn zero_arrivals_do_nothing() {
    let channels = exponential_channels();
    let config = SimConfig { arrival_rate: 0.0, ..small_config() };
    let plan = build_plan(&config, &channels, &[0.1; 5]).unwrap();
    let s = run(&config, &channels, &plan).unwrap();
    assert_eq!(s.throughput, 0.0);
    assert_eq!(s.decisions, [0, 0, 0]);
    assert_eq!(s.packets_generated, 0);
    assert_hygiene(&s);
}

#[test]
fn same_seed_same_stats() {
    let channels = exponential_channels();
    let config = small_config();
    let plan = build_plan(&config, &channels, &[0.2; 5]).unwrap();
    let a = run(&config, &channels, &plan).unwrap();
    let b = run(&config, &channels, &plan).unwrap();
    assert_eq!(a, b);
    let c = run(&SimConfig { seed: 2, ..config }, &channels, &plan).unwrap();
    assert_ne!(a.delivered_bytes, c.delivered_bytes);
}

#[test]
fn hygiene_holds_in_both_modes_and_channel_kinds() {
    let markov: Vec<ChannelModel> = [vec![10.0, 20.0, 30.0], vec![5.0, 15.0, 25.0]]
        .into_iter()
        .map(|r| ChannelModel::Markov(MarkovChannel::birth_death(0.7, r).unwrap()))
        .collect();
    for channels in [exponential_channels(), markov] {
        for mode in [Mode::Contention, Mode::MeanDelay] {
            let config = SimConfig { mode, ..small_config() };
            let plan = build_plan(&config, &channels, &vec![0.3; channels.len()]).unwrap();
            let s = run(&config, &channels, &plan).unwrap();
            assert!(s.packets_delivered > 0);
            assert_hygiene(&s);
        }
    }
}

#[test]
fn baseline_only_stops() {
    let channels = exponential_channels();
    let config = small_config();
    let plan = baseline_policy(&config, &channels).unwrap();
    let s = run(&config, &channels, &plan).unwrap();
    assert_eq!(s.decision_count(Action::Stay), 0);
    assert_eq!(s.decision_count(Action::Switch), 0);
    assert!(s.decision_count(Action::Stop) > 0);
    assert_hygiene(&s);
}

#[test]
fn baseline_single_user_rate_is_mean_reward_over_cycle() {
    let channels = exponential_channels();
    let config = SimConfig { n_users: 1, arrival_rate: 0.002, horizon: 2_000_000.0, warmup: 0.0, ..SimConfig::default() };
    let plan = baseline_policy(&config, &channels).unwrap();
    let s = run(&config, &channels, &plan).unwrap();
    let mean = channels.iter().map(ChannelModel::mean_reward).sum::<f64>() / 5.0;
    let expected = mean * 40.0 / 42.0;
    assert!((s.data_rate / expected - 1.0).abs() < 0.03, "{} vs {expected}", s.data_rate);
}

#[test]
fn mean_delay_mode_reproduces_configured_delay() {
    // a high threshold on a single channel makes almost every decision STAY
    let channels = vec![iid(DiscreteDistribution::new(vec![1.0, 100.0], vec![0.99, 0.01]).unwrap())];
    let config = SimConfig {
        n_users: 1,
        arrival_rate: 1.0,
        horizon: 700_000.0,
        warmup: 0.0,
        mode: Mode::MeanDelay,
        ..SimConfig::default()
    };
    let plan = build_plan(&config, &channels, &[0.3]).unwrap();
    let s = run(&config, &channels, &plan).unwrap();
    assert!(s.contention_samples[0] >= 100_000, "{}", s.contention_samples[0]);
    let target = plan.contention_delays[0];
    assert!((s.contention_delays[0] / target - 1.0).abs() < 0.02, "{} vs {target}", s.contention_delays[0]);
}

#[test]
fn equilibrium_on_symmetric_channels_is_symmetric() {
    let d = DiscreteDistribution::discretize_exponential(3.0, 15.0, 200).unwrap();
    let channels = vec![iid(d); 5];
    let config = SimConfig {
        n_users: 50,
        arrival_rate: 0.3 * 5.0 / 42.0 / 50.0,
        horizon: 4_000_000.0,
        warmup: 50_000.0,
        ..SimConfig::default()
    };
    let eq = equilibrium_loads(&config, &channels, &[0.1; 5], EquilibriumOptions::default()).unwrap();
    assert!(eq.converged);
    let mean = eq.loads.iter().sum::<f64>() / 5.0;
    for g in &eq.loads {
        assert!((g / mean - 1.0).abs() < 0.05, "{:?}", eq.loads);
    }
}

#[test]
fn equilibrium_history_starts_at_initial_loads() {
    let channels = exponential_channels();
    let config = small_config();
    let eq = equilibrium_loads(&config, &channels, &[0.1; 5], EquilibriumOptions { max_rounds: 3, ..Default::default() })
        .unwrap();
    assert_eq!(eq.history[0], vec![0.1; 5]);
    assert_eq!(eq.history.len(), eq.rounds + 1);
    assert_eq!(eq.plan.loads, eq.loads);
    assert!(equilibrium_loads(&config, &channels, &[0.1; 5], EquilibriumOptions { damping: 0.0, ..Default::default() })
        .is_err());
}

#[test]
fn plan_rejects_mismatched_inputs() {
    let channels = exponential_channels();
    let config = small_config();
    assert!(build_plan(&config, &channels, &[0.1; 4]).is_err());
    let plan = build_plan(&config, &channels, &[0.1; 5]).unwrap();
    assert!(run(&SimConfig { n_users: 3, ..config.clone() }, &channels, &plan).is_err());
    assert!(run(&SimConfig { warmup: 1e9, ..config }, &channels, &plan).is_err());
}
