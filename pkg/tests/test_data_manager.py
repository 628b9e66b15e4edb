import json
import os

import pandas as pd
import pytest

from coarsekit import spaces
from coarsekit.core_sets import count, mask_of
from coarsekit.data_manager import DataManager
from coarsekit.errors import InputError
from coarsekit.models import StepFunction


@pytest.fixture
def dm(tmp_path):
    return DataManager(str(tmp_path / 'out'))


def test_output_directory_is_created(tmp_path):
    DataManager(str(tmp_path / 'fresh'))
    assert os.path.isdir(tmp_path / 'fresh')


def test_load_gallery_space(dm, data_dir):
    p = dm.load_space(os.path.join(data_dir, 'metric_z_line.json'))
    assert p.kind == 'Metric'
    assert p.size == 10
    assert p.cutoff == 9
    p = dm.load_space(os.path.join(data_dir, 'metric_z_line.json'), cutoff=5, ladder=[2.0])
    assert p.cutoff == 5 and p.ladder == [2.0]


def test_load_finite_space_with_names(dm, data_dir):
    p = dm.load_space(os.path.join(data_dir, 'finite_nonnormal_topology.json'))
    assert p.kind == 'Finite'
    assert p.window.names == ['a', 'b', 'c']
    assert dm.resolve_points(p, ['b', 'c']) == mask_of([1, 2])
    with pytest.raises(InputError):
        dm.resolve_points(p, ['d'])


def test_missing_and_malformed_files(dm, tmp_path):
    with pytest.raises(InputError):
        dm.load_space(str(tmp_path / 'absent.json'))
    broken = tmp_path / 'broken.json'
    broken.write_text('{"kind": ')
    with pytest.raises(InputError) as info:
        dm.load_space(str(broken))
    assert info.value.details['path'] == str(broken)
    listing = tmp_path / 'listing.json'
    listing.write_text('[1, 2]')
    with pytest.raises(InputError):
        dm.load_space(str(listing))


def test_resolve_points_by_index_and_label(dm, small_line):
    assert dm.resolve_points(small_line, [0, [3]]) == mask_of([0, 3])
    with pytest.raises(InputError):
        dm.resolve_points(small_line, [10])
    with pytest.raises(InputError):
        dm.resolve_points(small_line, [[42]])


def test_load_subsets_with_ranges(dm, data_dir, two_block_line):
    subsets = dm.load_subsets(os.path.join(data_dir, 'two_block_subsets.json'), two_block_line)
    assert count(subsets['A']) == 102
    assert subsets['left'] == mask_of(range(0, 51))
    assert subsets['A'] == subsets['left'] | subsets['right']


def test_load_piecewise_function(dm, data_dir, two_block_line):
    f = dm.load_function(os.path.join(data_dir, 'two_block_function.json'), two_block_line)
    assert f.domain == mask_of(range(0, 51)) | mask_of(range(150, 201))
    assert f.values[0] == 0.0 and f.values[200] == 1.0
    assert f.range == (0.0, 1.0)


def test_load_csv_function(dm, tmp_path, small_line):
    path = tmp_path / 'f.csv'
    pd.DataFrame({'point_index': list(range(9, -1, -1)), 'value': [x / 10 for x in range(9, -1, -1)]}).to_csv(
        path, index=False)
    f = dm.load_function(str(path), small_line)
    assert f.values == [x / 10 for x in range(10)]
    assert f.range == (0.0, 0.9)


def test_function_length_must_match(dm, tmp_path, small_line):
    path = tmp_path / 'short.json'
    path.write_text(json.dumps({'values': [0.0, 1.0], 'lo': 0, 'hi': 1}))
    with pytest.raises(InputError):
        dm.load_function(str(path), small_line)
    path.write_text(json.dumps({'values': [0.0] * 10, 'lo': 0}))
    with pytest.raises(InputError):
        dm.load_function(str(path), small_line)


def test_save_report_is_sorted(dm):
    path = dm.save_report('report.json', {'zeta': 1, 'alpha': {'b': 2, 'a': 1}})
    with open(path, encoding='utf-8') as f:
        text = f.read()
    assert text.endswith('\n')
    assert text.index('"alpha"') < text.index('"zeta"')
    assert json.loads(text) == {'alpha': {'a': 1, 'b': 2}, 'zeta': 1}


def test_save_function_writes_domain_rows(dm):
    f = StepFunction(values=[0.0, 0.25, 0.5, 1.0], lo=0.0, hi=1.0, domain=mask_of([1, 3]))
    frame = pd.read_csv(dm.save_function('f.csv', f))
    assert frame['point_index'].tolist() == [1, 3]
    assert frame['value'].tolist() == [0.25, 1.0]


def test_saved_space_loads_back(dm, wedge):
    path = dm.save_space('wedge.json', wedge)
    again = dm.load_space(path)
    assert again.describe() == wedge.describe()
    assert spaces.wedge_diagonals(again) == spaces.wedge_diagonals(wedge)
