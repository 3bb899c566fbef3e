import json
import pytest
from sbtdcond.cli import main, parse_ranks, parse_ints
from sbtdcond.cli import EXIT_OK, EXIT_INPUT, EXIT_ILLPOSED
from sbtdcond.experiments import gen_odeco_sbtd, gen_illposed_sbtd
from sbtdcond.serialization import save_sbtd, load_sbtd
from sbtdcond.sbtd import validate


#### Helper methods ##########################################################
def _records(out):
    return [json.loads(line) for line in out.strip().split('\n') if line]


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _odeco_file(tmp_path):
    path = str(tmp_path / 'odeco.json')
    save_sbtd(path, gen_odeco_sbtd((5, 5, 3), [(2, 2, 1)] * 2, seed=0))
    return path


#### Tests ###################################################################
def test_parse_ranks():
    assert parse_ranks('2x2,2,1') == [(2, 2, 1)] * 2
    assert parse_ranks('2,2,1;1,2,2') == [(2, 2, 1), (1, 2, 2)]
    assert parse_ranks('3x1,1,1') == [(1, 1, 1)] * 3
    assert parse_ints('60,40,40') == (60, 40, 40)
    with pytest.raises(ValueError):
        parse_ints('4,a')
    with pytest.raises(ValueError):
        parse_ranks('0x2,2,1')


def test_cond_odeco(tmp_path, capsys):
    path = _odeco_file(tmp_path)
    code, out, _ = _run(capsys, 'cond', '--decomp', path, '--method', 'both')
    assert code == EXIT_OK
    direct, compressed, discrepancy = _records(out)
    assert direct['method'] == 'direct'
    assert compressed['method'] == 'compressed'
    for rec in (direct, compressed):
        assert abs(rec['kappa'] - 1) < 1e-10, rec
        assert rec['ill_posed'] is False
    assert compressed['compressed_dims'] == [4, 4, 2]
    assert discrepancy['kappa_rel_discrepancy'] < 1e-10


def test_cond_illcond(tmp_path, capsys):
    path = str(tmp_path / 'g.json')
    code, _, _ = _run(capsys, 'gen', '--model', 'illcond-btd', '--seed', 42,
                      '--param', 'N=100', '--out', path)
    assert code == EXIT_OK
    code, out, _ = _run(capsys, 'cond', '--decomp', path, '--method', 'both')
    assert code == EXIT_OK
    records = _records(out)
    assert records[0]['kappa'] > 10
    assert records[-1]['kappa_rel_discrepancy'] <= 1e-8, records


def test_cond_text_format(tmp_path, capsys):
    path = _odeco_file(tmp_path)
    code, out, _ = _run(capsys, 'cond', '--decomp', path, '--format', 'text')
    assert code == EXIT_OK
    lines = out.strip().split('\n')
    assert lines[0].startswith('kappa: ')
    assert abs(float(lines[0].split(': ')[1]) - 1) < 1e-10
    assert 'method: compressed' in lines

    code, out, _ = _run(capsys, 'cond', '--decomp', path, '--format', 'text',
                        '--method', 'both')
    assert code == EXIT_OK
    lines = out.split('\n')
    assert lines[-1] == '' and '' not in lines[:-1], out
    assert sum(line.startswith('kappa: ') for line in lines) == 2
    assert lines[-2].startswith('kappa_rel_discrepancy: ')


def test_cond_input_errors(tmp_path, capsys):
    path = str(tmp_path / 'bad.json')
    with open(path, 'w') as f:
        f.write('{"schema_version": 1, ')
    code, out, err = _run(capsys, 'cond', '--decomp', path)
    assert code == EXIT_INPUT
    assert out == ''
    assert 'malformed JSON' in err

    code, out, err = _run(capsys, 'cond', '--decomp',
                          str(tmp_path / 'missing.json'))
    assert code == EXIT_INPUT and out == ''


def test_cond_illposed(tmp_path, capsys):
    path = str(tmp_path / 'ip.json')
    save_sbtd(path, gen_illposed_sbtd('shared-subspace'))
    code, out, _ = _run(capsys, 'cond', '--decomp', path)
    assert code == EXIT_OK
    assert _records(out)[0]['ill_posed'] is True

    code, out, _ = _run(capsys, 'cond', '--decomp', path, '--fail-on-illposed')
    assert code == EXIT_ILLPOSED
    assert _records(out)[0]['kappa'] == float('inf')


def test_gen_deterministic(tmp_path, capsys):
    a, b = str(tmp_path / 'a.json'), str(tmp_path / 'b.json')
    for path in (a, b):
        code, _, _ = _run(capsys, 'gen', '--model', 'illcond-btd', '--seed', 3,
                          '--param', 'N=1000', '--out', path)
        assert code == EXIT_OK
    with open(a, 'rb') as fa, open(b, 'rb') as fb:
        assert fa.read() == fb.read()


def test_gen_illcond_inflated(tmp_path, capsys):
    core, big = str(tmp_path / 'core.json'), str(tmp_path / 'big.json')
    code, out, _ = _run(capsys, 'gen', '--model', 'illcond-btd', '--seed', 1,
                        '--param', 'N=10', '--out', core,
                        '--out-inflated', big)
    assert code == EXIT_OK
    record = _records(out)[0]
    assert record['dims'] == [4, 4, 2]
    assert record['inflated_dims'] == [60, 40, 40]
    assert load_sbtd(core).dims == (4, 4, 2)
    assert load_sbtd(big).dims == (60, 40, 40)

    code, _, err = _run(capsys, 'gen', '--model', 'random-btd',
                        '--out', core, '--out-inflated', big)
    assert code == EXIT_INPUT and 'out-inflated' in err


def test_gen_models(tmp_path, capsys):
    path = str(tmp_path / 'cpd.json')
    code, _, _ = _run(capsys, 'gen', '--model', 'random-cpd', '--param',
                      'rank=3', '--param', 'dims=5,5,5', '--out', path)
    assert code == EXIT_OK
    s = load_sbtd(path)
    assert len(s) == 3 and s.dims == (5, 5, 5)
    assert all(t.structure.name == 'rank1' for t in s)
    assert validate(s).ok

    for model, params in [('random-btd', ['ranks=2x2,2,1', 'dims=4,4,2']),
                          ('odeco', ['ranks=3x1,1,1', 'dims=3,3,3',
                                     'structure=rank1']),
                          ('illcond-cpd', ['N=50'])]:
        argv = ['gen', '--model', model, '--out', path]
        for p in params:
            argv += ['--param', p]
        code, _, err = _run(capsys, *argv)
        assert code == EXIT_OK, (model, err)
        assert validate(load_sbtd(path)).ok, model

    code, _, err = _run(capsys, 'gen', '--model', 'random-cpd', '--param',
                        'colour=red', '--out', path)
    assert code == EXIT_INPUT and 'colour' in err
    code, _, err = _run(capsys, 'gen', '--model', 'random-cpd', '--param',
                        'rank', '--out', path)
    assert code == EXIT_INPUT


def test_verify(capsys):
    code, out, _ = _run(capsys, 'verify', '--trials', 0)
    assert code == EXIT_OK
    summary = _records(out)[-1]
    assert summary['trials'] == 0 and summary['failed'] == 0

    code, out, _ = _run(capsys, 'verify', '--trials', 5, '--seed', 2,
                        '--all-records')
    assert code == EXIT_OK
    records = _records(out)
    assert len(records) == 6
    assert records[-1]['passed'] + records[-1]['skipped'] == 5


def test_bench(capsys):
    code, out, _ = _run(capsys, 'bench', '--dims', '6,5,4', '--dims', '8,8,8',
                        '--ranks', '2x2,2,1', '--repeat', 1)
    assert code == EXIT_OK
    records = _records(out)
    assert [r['dims'] for r in records] == [[6, 5, 4], [8, 8, 8]]
    for r in records:
        assert r['compressed_dims'] == [4, 4, 2]
        assert r['time_direct'] > 0 and r['time_compressed'] > 0
        assert abs(r['kappa_direct'] - r['kappa_compressed']) <= (
            1e-8 * r['kappa_direct'])


def test_probe(tmp_path, capsys):
    path = _odeco_file(tmp_path)
    code, out, _ = _run(capsys, 'probe', '--decomp', path, '--samples', 50)
    assert code == EXIT_OK
    record = _records(out)[0]
    assert record['samples'] == 50
    assert record['max_ratio'] <= record['kappa_ref'] * (1 + 1e-8)

    gpath = str(tmp_path / 'g.json')
    _run(capsys, 'gen', '--model', 'illcond-btd', '--seed', 5,
         '--param', 'N=100', '--out', gpath)
    code, out, _ = _run(capsys, 'probe', '--decomp', gpath, '--samples', 20,
                        '--inject-singular')
    assert code == EXIT_OK
    record = _records(out)[0]
    assert abs(record['max_ratio'] / record['kappa_ref'] - 1) < 1e-8, record

    ipath = str(tmp_path / 'ip.json')
    save_sbtd(ipath, gen_illposed_sbtd('shared-subspace'))
    code, out, err = _run(capsys, 'probe', '--decomp', ipath)
    assert code == EXIT_ILLPOSED
    assert out == '' and 'ill-posed' in err


if __name__ == '__main__':
    pytest.main([__file__, "-s"])
