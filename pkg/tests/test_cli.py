import json

import pandas as pd
import pytest

from main import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main, parse_arguments


FAST = ['--iters', '300', '--burnin', '100', '--seed', '4']


@pytest.fixture
def scores(tmp_path):
    path = tmp_path / 'scores.csv'
    path.write_text('id,z\na,0.2\nb,5.0\nc,-0.4\nd,0.1\n')
    return str(path)


def test_parse_arguments_defaults():
    args = parse_arguments(['fit', 'in.csv', '--out', 'out.json'])
    assert args.method == 'dl-grid'
    assert args.iters is None
    args = parse_arguments(['prior-check', '--out', 'dir'])
    assert args.n == 100
    assert args.delta == [0.01, 0.1, 0.5, 1.0, 2.0]


def test_fit(tmp_path, scores):
    out = tmp_path / 'fit.json'
    assert main(['fit', scores, '--method', 'dl', '--a', '0.25', '--out', str(out)] + FAST) == EXIT_OK
    document = json.loads(out.read_text())
    assert document['metadata']['method'] == 'dl:0.25'
    assert document['metadata']['iterations'] == 300
    assert len(document['coordinates']) == 4


def test_fit_a_requires_dl(tmp_path, scores):
    assert main(['fit', scores, '--method', 'bl', '--a', '0.2', '--out', str(tmp_path / 'o.json')]) == EXIT_VALIDATION


def test_fit_missing_input(tmp_path):
    assert main(['fit', str(tmp_path / 'nope.csv'), '--out', str(tmp_path / 'o.json')] + FAST) == EXIT_VALIDATION


def test_fit_malformed_input(tmp_path):
    bad = tmp_path / 'bad.csv'
    bad.write_text('id,z\na,1\nb,oops\n')
    assert main(['fit', str(bad), '--out', str(tmp_path / 'o.json')] + FAST) == EXIT_VALIDATION


def test_simulate_writes_report_and_table(tmp_path):
    out = tmp_path / 'sim.json'
    argv = ['simulate', '--n', '10', '--q', '2', '--signal', '5', '--replicates', '2',
            '--methods', 'dl,hs', '--out', str(out), '--no-progress'] + FAST
    assert main(argv) == EXIT_OK
    document = json.loads(out.read_text())
    assert [m['method'] for m in document['methods']] == ['dl', 'hs']
    assert document['failures'] == 0
    assert 'mean_wall_time' not in document['methods'][0]
    table = pd.read_csv(tmp_path / 'sim.csv')
    assert list(table['method']) == ['dl', 'hs']


def test_simulate_is_reproducible(tmp_path):
    argv = ['simulate', '--n', '8', '--q', '1', '--replicates', '2', '--methods', 'bl', '--no-progress'] + FAST
    main(argv + ['--out', str(tmp_path / 'a.json')])
    main(argv + ['--out', str(tmp_path / 'b.json')])
    assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()


def test_simulate_timings_flag(tmp_path):
    out = tmp_path / 'sim.json'
    argv = ['simulate', '--n', '8', '--q', '1', '--replicates', '1', '--methods', 'bl',
            '--timings', '--out', str(out), '--no-progress'] + FAST
    assert main(argv) == EXIT_OK
    assert 'wall_time' in json.loads(out.read_text())['replicates'][0]


def test_simulate_failure_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError('boom')

    monkeypatch.setattr('src.simulation.run_method', boom)
    argv = ['simulate', '--n', '8', '--q', '1', '--replicates', '1', '--methods', 'bl', '--no-progress'] + FAST
    assert main(argv) == EXIT_RUNTIME


def test_simulate_invalid_scenario():
    assert main(['simulate', '--n', '5', '--q', '9', '--no-progress'] + FAST) == EXIT_VALIDATION


def test_simulate_invalid_thread_variable(monkeypatch):
    monkeypatch.setenv('SHRINKAGE_THREADS', 'many')
    argv = ['simulate', '--n', '8', '--q', '1', '--replicates', '1', '--methods', 'bl', '--no-progress'] + FAST
    assert main(argv) == EXIT_VALIDATION


def test_config_file(tmp_path):
    config = tmp_path / 'config.yaml'
    config.write_text('simulation:\n  n: 6\n  q: 1\n  replicates: 1\n  methods: [hs]\n')
    out = tmp_path / 'sim.json'
    assert main(['simulate', '--config', str(config), '--out', str(out), '--no-progress'] + FAST) == EXIT_OK
    document = json.loads(out.read_text())
    assert document['scenario']['n'] == 6
    assert document['scenario']['methods'] == ['hs']


def test_missing_config_file(tmp_path):
    assert main(['simulate', '--config', str(tmp_path / 'none.yaml')] + FAST) == EXIT_VALIDATION


def test_prior_check(tmp_path):
    argv = ['prior-check', '--a', '0.1', '--delta', '0.01', '1.5', '--draws', '10000', '--out', str(tmp_path)]
    assert main(argv) == EXIT_OK
    document = json.loads((tmp_path / 'tail_mass.json').read_text())
    assert document['a'] == 0.1
    assert len(document['tail_mass']) == 2
    assert (tmp_path / 'density_grid.csv').exists()


def test_prior_check_rejects_few_draws(tmp_path):
    assert main(['prior-check', '--draws', '50', '--out', str(tmp_path)]) == EXIT_VALIDATION
