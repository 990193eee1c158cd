import numpy as np
import pytest

from src.cache import ReplicateCache
from src.config import Config, GuardSettings
from src.distributions import RngStream
from src.errors import ValidationError
from src.gibbs import ChainConfig
from src.models import MethodSpec, ReplicateReport, Scenario, parse_methods
from src.simulation import generate_data, resolve_q, run_replicate, run_scenario, scenario_from_config


SMALL_CHAIN = ChainConfig(iterations=300, burn_in=100)


def _scenario(**overrides) -> Scenario:
    values = dict(
        n=10,
        q=2,
        signal=5.0,
        replicates=3,
        methods=parse_methods(['dl', 'bl']),
        chain=SMALL_CHAIN,
        base_seed=99,
    )
    values.update(overrides)
    return Scenario(**values)


class TestResolveQ:
    def test_count(self):
        assert resolve_q(5, 100) == 5
        assert resolve_q('5', 100) == 5

    def test_percentage(self):
        assert resolve_q('20%', 500) == 100
        assert resolve_q(' 10% ', 200) == 20

    def test_invalid(self):
        with pytest.raises(ValidationError):
            resolve_q('many', 100)
        with pytest.raises(ValidationError):
            resolve_q(2.5, 100)


class TestMethodSpec:
    @pytest.mark.parametrize('label, kind, a', [
        ('dl', 'dl', None),
        ('DL:0.5', 'dl', 0.5),
        ('dl-grid', 'dl-grid', None),
        ('bl', 'bl', None),
        (' hs ', 'hs', None),
    ])
    def test_parse(self, label, kind, a):
        method = MethodSpec.parse(label)
        assert (method.kind, method.a) == (kind, a)

    @pytest.mark.parametrize('label', ['lasso', 'dl:abc', 'dl:1.0', 'dl:0'])
    def test_rejects(self, label):
        with pytest.raises(ValidationError):
            MethodSpec.parse(label)

    def test_comma_separated_list(self):
        assert [m.label for m in parse_methods('dl:0.1, dl:0.5,hs')] == ['dl:0.1', 'dl:0.5', 'hs']

    def test_duplicates(self):
        with pytest.raises(ValidationError):
            parse_methods(['bl', 'BL'])


class TestScenario:
    def test_truth(self):
        theta0 = Scenario(n=100, q=5, signal=7.0).truth()
        assert theta0.sum() == 35.0
        assert np.sum(theta0 ** 2) == 245.0
        assert np.count_nonzero(theta0) == 5

    def test_block_truth(self):
        scenario = Scenario(n=1000, q=100, signal=3.0, signal_blocks=((10, 10.0), (90, 3.0)))
        theta0 = scenario.truth()
        assert np.sum(theta0 ** 2) == 1810.0
        assert theta0[9] == 10.0 and theta0[10] == 3.0 and theta0[100] == 0.0

    def test_null_truth(self):
        assert not Scenario(n=20, q=0, signal=0.0).truth().any()

    @pytest.mark.parametrize('kwargs', [
        {'n': 0, 'q': 0, 'signal': 1.0},
        {'n': 10, 'q': 10, 'signal': 1.0},
        {'n': 10, 'q': 2, 'signal': 0.0},
        {'n': 10, 'q': 2, 'signal': 1.0, 'replicates': 0},
        {'n': 10, 'q': 2, 'signal': 1.0, 'base_seed': -1},
        {'n': 10, 'q': 0, 'signal': 1.0, 'signal_blocks': ((8, 1.0), (5, 2.0))},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            Scenario(**kwargs)

    def test_fingerprint_ignores_replicate_count(self):
        assert _scenario().fingerprint() == _scenario(replicates=7).fingerprint()
        assert _scenario().fingerprint() != _scenario(signal=6.0).fingerprint()
        assert _scenario().fingerprint() != _scenario(chain=ChainConfig(iterations=400, burn_in=100)).fingerprint()


def test_generate_data_adds_unit_noise():
    scenario = Scenario(n=20_000, q=0, signal=0.0)
    y, theta0 = generate_data(RngStream(3), scenario)
    assert not theta0.any()
    assert y.mean() == pytest.approx(0.0, abs=0.03)
    assert y.var() == pytest.approx(1.0, abs=0.05)


class TestRunScenario:
    def test_report_shape(self):
        report = run_scenario(_scenario())
        assert [m.method for m in report.methods] == ['dl', 'bl']
        assert [(r.method, r.replicate) for r in report.replicates] == [
            ('dl', 0), ('dl', 1), ('dl', 2), ('bl', 0), ('bl', 1), ('bl', 2)
        ]
        assert not report.failures
        for summary in report.methods:
            assert summary.replicates == 3
            assert summary.mean_squared_error > 0
            assert summary.mc_se > 0

    def test_deterministic(self):
        first = run_scenario(_scenario()).to_dict()
        second = run_scenario(_scenario()).to_dict()
        assert first == second
        assert 'wall_time' not in first['replicates'][0]

    def test_worker_count_does_not_change_results(self):
        assert run_scenario(_scenario(), threads=2).to_dict() == run_scenario(_scenario(), threads=1).to_dict()

    def test_replicates_see_different_data(self):
        report = run_scenario(_scenario(methods=parse_methods(['bl'])))
        errors = [r.squared_error for r in report.replicates]
        assert len(set(errors)) == len(errors)

    def test_replicates_do_not_depend_on_each_other(self):
        full = run_scenario(_scenario(replicates=3))
        shorter = run_scenario(_scenario(replicates=2))
        by_cell = {(r.method, r.replicate): r.to_dict(include_timings=False) for r in full.replicates}
        for report in shorter.replicates:
            assert by_cell[(report.method, report.replicate)] == report.to_dict(include_timings=False)

        alone = run_replicate(_scenario(replicates=3), replicate=2, method_index=1)
        assert alone.to_dict(include_timings=False) == by_cell[('bl', 2)]

    def test_empty_method_list(self):
        report = run_scenario(_scenario(methods=()))
        assert report.methods == []
        assert report.replicates == []

    def test_failure_is_recorded(self, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError('sampler exploded')

        monkeypatch.setattr('src.simulation.run_method', boom)
        report = run_scenario(_scenario(replicates=2))
        assert len(report.failures) == 4
        assert report.failures[0].error == 'RuntimeError: sampler exploded'
        assert report.methods[0].failures == 2
        assert report.to_dict()['failures'] == 4
        assert report.to_dict()['replicates'][0]['squared_error'] is None

    def test_cache_reuses_finished_cells(self, tmp_path, monkeypatch):
        cache = ReplicateCache(str(tmp_path / 'cache'))
        first = run_scenario(_scenario(replicates=2), cache=cache)
        assert cache.get_cache_stats()['cells'] == 4

        def boom(*args, **kwargs):
            raise RuntimeError('should have been cached')

        monkeypatch.setattr('src.simulation.run_method', boom)
        second = run_scenario(_scenario(replicates=2), cache=cache)
        assert second.to_dict() == first.to_dict()

        assert cache.clear() == 4
        assert cache.get_cache_stats()['cells'] == 0

    def test_fixed_concentrations_are_cached_separately(self, tmp_path):
        cache = ReplicateCache(str(tmp_path))
        scenario = _scenario(replicates=1, methods=parse_methods(['dl:0.1', 'dl:0.5']))
        report = run_scenario(scenario, cache=cache)
        assert cache.get_cache_stats()['cells'] == 2
        assert report.replicates[0].squared_error != report.replicates[1].squared_error

    def test_cached_cells_follow_method_position(self, tmp_path):
        cache = ReplicateCache(str(tmp_path))
        run_scenario(_scenario(replicates=2, methods=parse_methods(['dl', 'bl'])), cache=cache)

        alone = _scenario(replicates=2, methods=parse_methods(['bl']))
        warm = run_scenario(alone, cache=cache)
        fresh = run_scenario(alone)
        assert warm.to_dict() == fresh.to_dict()
        assert cache.get_cache_stats()['cells'] == 6

    def test_guards_are_part_of_the_cache_key(self, tmp_path, monkeypatch):
        cache = ReplicateCache(str(tmp_path))
        scenario = _scenario(replicates=1, methods=parse_methods(['dl']))
        run_scenario(scenario, cache=cache)

        calls = []
        original = run_replicate

        def counting(*args, **kwargs):
            calls.append(args)
            return original(*args, **kwargs)

        monkeypatch.setattr('src.simulation.run_replicate', counting)
        run_scenario(scenario, cache=cache, guards=GuardSettings(theta_floor=1e-8))
        assert len(calls) == 1
        assert cache.get_cache_stats()['cells'] == 2

    def test_fingerprint_tracks_guards(self):
        scenario = _scenario()
        assert scenario.fingerprint() == scenario.fingerprint(None)
        assert scenario.fingerprint({'theta_floor': 1e-10, 'chi_floor': 1e-12}) != \
            scenario.fingerprint({'theta_floor': 1e-8, 'chi_floor': 1e-12})


def test_run_replicate_reports_diagnostics():
    report = run_replicate(_scenario(), replicate=0, method_index=0)
    assert isinstance(report, ReplicateReport)
    assert report.ok
    assert 0 < report.min_ess <= report.mean_ess <= 200
    assert 0.0 <= report.coverage <= 1.0


class TestScenarioFromConfig:
    def test_defaults(self):
        scenario = scenario_from_config(Config())
        assert (scenario.n, scenario.q, scenario.signal, scenario.replicates) == (100, 5, 7.0, 20)
        assert [m.label for m in scenario.methods] == ['dl', 'bl', 'hs']
        assert scenario.chain.iterations == 10000

    def test_overrides(self):
        config = Config()
        config.override('simulation.n', 200)
        config.override('simulation.q', '10%')
        config.override('prior.a', 0.25)
        config.override('prior.a_grid', '0.1,0.2')
        config.override('chain.iterations', 500)
        config.override('chain.burn_in', 100)
        scenario = scenario_from_config(config)
        assert scenario.q == 20
        assert scenario.methods[0] == MethodSpec('dl', 'dl', 0.25)
        assert scenario.a_grid == (0.1, 0.2)
        assert scenario.chain.retained == 400

    def test_block_design(self):
        config = Config()
        config.override('simulation.signal', 3.0)
        scenario = scenario_from_config(config, 'table2')
        assert scenario.n == 1000
        assert scenario.q == 100
        assert np.sum(scenario.truth() ** 2) == 1810.0

    def test_unknown_design(self):
        with pytest.raises(ValidationError):
            scenario_from_config(Config(), 'table3')
