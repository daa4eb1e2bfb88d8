import json

import pytest

from coalog.main import main


MODEL = '''\
functor: Pow
states: 0 1
0 -> {0, 1}
1 -> {}
'''

LOOPS = '''\
functor: Pow
states: x y
x -> {x}
y -> {y}
'''

ALGEBRA = '''\
functor: Pow
atoms: u v
dual: u -> {v}
dual: v -> {}
'''


@pytest.fixture
def write(tmp_path):
    def write_file(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write_file


def lines(capsys):
    return capsys.readouterr().out.splitlines()


def test_derive(capsys):
    assert main(['derive', '-f', 'Pow']) == 0
    assert lines(capsys) == [
        'operators (1):',
        '  box\tunary, argument at the state layer',
        'axioms (2):',
        '  box-top: box true = true',
        '  box-meet: box (a & b) = box a & box b',
    ]


def test_derive_rejects_bad_functor(capsys):
    assert main(['derive', '-f', 'Pow +']) == 2
    assert 'coalog:' in capsys.readouterr().err


def test_model_check(capsys, write):
    model, valuation = write('model.txt', MODEL), write('val.txt', 'p = {0}\n')
    assert main(['mc', '-m', model, '-V', valuation, '-p', 'box p']) == 0
    assert lines(capsys) == ['{1}']
    assert main(['mc', '-m', model, '-p', 'box true']) == 0
    assert lines(capsys) == ['{0, 1}']


def test_model_check_errors(capsys, write):
    model = write('model.txt', MODEL)
    assert main(['mc', '-m', model, '-p', 'box (']) == 2
    assert main(['mc', '-m', model, '-p', 'box p']) == 2
    corrupted = write('bad.txt', MODEL.replace('{0, 1}', '{0, 5}'))
    assert main(['mc', '-m', corrupted, '-p', 'true']) == 2
    assert 'line 3' in capsys.readouterr().err
    assert main(['mc', '-m', str(write('x', '')) + '.missing', '-p', 'true']) == 2


def test_bisim(capsys, write):
    loops = write('loops.txt', LOOPS)
    assert main(['bisim', '-m', loops]) == 0
    assert lines(capsys) == ['{x, y}']
    assert main(['bisim', '-m', loops, '-m', loops]) == 0
    assert lines(capsys) == ['{1.x, 1.y, 2.x, 2.y}']


def test_bisim_quotient(capsys, write):
    assert main(['bisim', '-q', '-m', write('loops.txt', LOOPS)]) == 0
    assert lines(capsys) == ['{x, y}', '', 'functor: Pow', '# s0 = {x,y}', 'states: s0', 's0 -> {s0}']


def test_bisim_of_empty_model(capsys, write):
    assert main(['bisim', '-m', write('empty.txt', 'functor: Pow\nstates:\n')]) == 0
    assert lines(capsys) == []


def test_decide(capsys):
    assert main(['decide', '-f', 'Pow', '-p', '(box (p -> q) & box p) -> box q']) == 0
    assert lines(capsys) == ['derivable']
    assert main(['decide', '-f', 'Pow', '--lhs', 'box (p | q)', '--rhs', 'box p | box q']) == 1
    assert lines(capsys) == ['not derivable']


def test_decide_usage_errors():
    assert main(['decide', '-f', 'Pow', '--lhs', 'box p']) == 2
    assert main(['decide', '-f', 'Pow', '-p', 'p', '--lhs', 'p']) == 2
    assert main(['decide', '-f', 'Pow', '--vars', 'p', '-p', 'box q']) == 2


def test_decide_hits_resource_limit(capsys):
    assert main(['--limit', '16', 'decide', '-f', 'Pow', '--vars', 'r', '--lhs', 'box (box r)', '--rhs', 'true']) == 3
    assert 'resource limit' in capsys.readouterr().err


def test_counter(capsys):
    assert main(['counter', '-f', 'Pow', '-g', 'box p <= p', '-n', '2']) == 1
    out = lines(capsys)
    assert out[0] == 'functor: Pow'
    assert out[-1] == 'refuted at: 0'


def test_counter_exhausted(capsys):
    assert main(['counter', '-f', 'Pow', '-g', 'true <= box true']) == 0
    assert lines(capsys)[0].startswith('exhausted')
    assert main(['counter', '-f', 'Pow', '-g', 'box p <= p', '-n', '0']) == 0
    assert lines(capsys)[0].startswith('exhausted')


def test_counter_with_assumption(capsys):
    assert main(['counter', '-f', 'Pow', '-a', 'true <= box false', '-g', 'true <= false', '-n', '1']) == 1
    assert lines(capsys) == ['functor: Pow', 'states: 0', '0 -> {}', 'refuted at: 0']


def test_verify(capsys):
    assert main(['verify', '-s', 'jt', '-f', 'Pow', '-n', '3', '--trials', '5', '--workers', '1']) == 0
    out = lines(capsys)
    assert 'PASS jt Pow: 8/8' in out
    assert out[-1] == 'jt: 8 passed, 0 failed'


def test_verify_all_functors(capsys):
    assert main(['verify', '-s', 'delta-iso', '--all', '-n', '2']) == 0
    assert lines(capsys)[-1] == 'delta-iso: 24 passed, 0 failed'


def test_verify_json(capsys):
    assert main(['verify', '-s', 'h-explicit', '-f', 'Pow', '-n', '2', '--json']) == 0
    report = json.loads(capsys.readouterr().out)
    assert report['ok'] is True
    assert report['passed'] == 3
    assert [result['size'] for result in report['results']] == [0, 1, 2]


def test_verify_without_functor():
    assert main(['verify', '-s', 'jt']) == 2


def test_verify_with_no_applicable_trials(capsys):
    assert main(['verify', '-s', 'h-explicit', '-f', 'Id']) == 0
    assert lines(capsys) == ['h-explicit: no trials apply']


def test_liftings(capsys):
    assert main(['liftings', '-f', 'Pow', '-k', '1']) == 0
    out = lines(capsys)
    assert len(out) == 16
    assert out[0] == '{}'
    assert main(['liftings', '-f', 'Pow', '-k', '1', '--count-only']) == 0
    assert lines(capsys) == ['16']
    assert main(['liftings', '-f', 'Id', '-k', '0', '--count-only']) == 0
    assert lines(capsys) == ['2']


def test_liftings_of_large_functor(capsys):
    assert main(['liftings', '-f', 'Nbhd', '-k', '2']) == 3
    assert main(['liftings', '-f', 'Nbhd', '-k', '2', '--count-only']) == 0
    assert lines(capsys) == ['2^65536']


@pytest.mark.parametrize('argv', [['-f', 'Nbhd', '-k', '3'], ['-f', 'Pow', '-k', '6'], ['-f', 'Pow.Pow', '-k', '9']])
def test_liftings_beyond_limit_exit_with_resource_code(capsys, argv):
    assert main(['liftings'] + argv) == 3
    assert 'resource limit' in capsys.readouterr().err


def test_liftings_count_only_never_builds_the_count(capsys):
    assert main(['liftings', '-f', 'Nbhd', '-k', '3', '--count-only']) == 0
    assert lines(capsys) == ['2^(2^256)']
    assert main(['liftings', '-f', 'Pow', '-k', '6', '--count-only']) == 0
    assert lines(capsys) == ['2^(2^64)']
    assert main(['liftings', '-f', 'Nbhd', '-k', '6', '--count-only']) == 0
    assert lines(capsys) == ['at least 2^(2^131072)']


def test_check(capsys, write):
    derivation = write('proof.txt', '1: axiom box-top\n2: sym 1\n')
    assert main(['check', '-f', 'Pow', '-d', derivation]) == 0
    assert lines(capsys) == ['1: box true = true', '2: true = box true']


def test_check_reports_failing_step(capsys, write):
    derivation = write('proof.txt', '1: axiom box-top\n2: sym 1 ; box true = true\n')
    assert main(['check', '-f', 'Pow', '-d', derivation]) == 1
    out = lines(capsys)
    assert out[0] == '1: box true = true'
    assert out[-1].startswith('step 2:')


def test_check_rejects_malformed_file(write):
    assert main(['check', '-f', 'Pow', '-d', write('proof.txt', '1: prove it\n')]) == 2


def test_jt_from_algebra_file(capsys, write):
    assert main(['jt', '-a', write('alg.txt', ALGEBRA)]) == 0
    out = lines(capsys)
    assert out[:4] == ['functor: Pow', 'states: u v', 'u -> {v}', 'v -> {}']
    assert out[-1].startswith('embedded:')


def test_jt_complex_algebra_of_model(capsys, write):
    assert main(['jt', '-m', write('model.txt', MODEL)]) == 0
    text = capsys.readouterr().out
    assert text.splitlines() == ['functor: Pow', 'atoms: 0 1', 'dual: 0 -> {0, 1}', 'dual: 1 -> {}']
    assert main(['jt', '-a', write('alg.txt', text)]) == 0
    assert lines(capsys)[:4] == MODEL.splitlines()


def test_jt_reports_failed_embedding(capsys, monkeypatch, write):
    monkeypatch.setattr('coalog.duality.one_step', lambda *args: frozenset())
    assert main(['jt', '-a', write('alg.txt', ALGEBRA)]) == 1
    assert lines(capsys)[-1].startswith('not embedded: h is undefined')


def test_jt_needs_exactly_one_source(write):
    assert main(['jt']) == 2
    assert main(['jt', '-a', write('alg.txt', ALGEBRA), '-m', write('model.txt', MODEL)]) == 2
    assert main(['jt', '-a', write('bad.txt', 'functor: Pow\natoms: u\n')]) == 2


def test_config_defaults(capsys):
    assert main(['config']) == 0
    assert json.loads(capsys.readouterr().out) == {'limit': 1048576, 'seed': 0, 'trials': 20, 'workers': 4}


def test_config_sources(capsys, monkeypatch, isolated_config):
    isolated_config.write_text(json.dumps({'trials': 3}))
    monkeypatch.setenv('COALOG_SEED', '7')
    assert main(['--limit', '99', 'config']) == 0
    assert json.loads(capsys.readouterr().out) == {'limit': 99, 'seed': 7, 'trials': 3, 'workers': 4}


def test_config_save(capsys, isolated_config):
    assert main(['--limit', '512', 'config', '--save']) == 0
    assert 'Saved config' in capsys.readouterr().out
    assert json.loads(isolated_config.read_text())['limit'] == 512
    assert main(['config']) == 0
    assert json.loads(capsys.readouterr().out)['limit'] == 512


@pytest.mark.parametrize('text', ['{"bogus": 1}', '{not json'])
def test_bad_config_file(isolated_config, text):
    isolated_config.write_text(text)
    assert main(['config']) == 2


def test_usage_errors():
    assert main([]) == 2
    assert main(['derive']) == 2
    assert main(['verify', '-s', 'nope', '-f', 'Pow']) == 2


@pytest.mark.parametrize('error', [OverflowError('too many digits'), MemoryError()])
def test_arithmetic_blowups_exit_with_resource_code(capsys, monkeypatch, error):
    def blow_up(args):
        raise error
    monkeypatch.setattr('coalog.cli.CoalogCLI.cmd_derive', staticmethod(blow_up))
    assert main(['derive', '-f', 'Pow']) == 3
    assert 'resource limit' in capsys.readouterr().err
