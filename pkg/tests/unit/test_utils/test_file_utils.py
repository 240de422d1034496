"""
Unit tests for file utility functions
"""
import json

import numpy as np
import pandas as pd
import pytest

from splitstep.models.params import BoundaryClass
from splitstep.utils import (
    ensure_dir,
    load_matrix,
    load_metadata,
    write_csv,
    write_matrix,
    write_metadata,
    write_text,
)


class TestFileOperations:
    """
    Test output writers.

    Test Coverage:
        - CSV tables without index and with LF line endings
        - Whitespace matrices readable by numpy and gnuplot
        - Sorted JSON metadata with numpy values
        - Error logging on write failures
    """

    @pytest.mark.unit
    def test_ensure_dir_creates_parents(self, temp_data_dir):
        """Test nested output directories are created"""
        target = ensure_dir(temp_data_dir / "a" / "b")
        assert target.is_dir()
        assert ensure_dir(target) == target

    @pytest.mark.unit
    def test_write_csv(self, temp_data_dir):
        """Test header, no index and LF endings"""
        path = write_csv(pd.DataFrame({"dt": [0.5, 0.25], "error": [0.1, 0.05]}), temp_data_dir / "e.csv")
        assert path.read_bytes() == b"dt,error\n0.5,0.1\n0.25,0.05\n"

    @pytest.mark.unit
    def test_write_matrix_round_trip(self, temp_data_dir):
        """Test matrices come back with their shape"""
        data = np.arange(6, dtype=float).reshape(2, 3) / 7.0
        path = write_matrix(data, temp_data_dir / "m.txt")
        np.testing.assert_allclose(load_matrix(path), data, rtol=1e-9)

    @pytest.mark.unit
    def test_write_matrix_vector(self, temp_data_dir):
        """Test a vector becomes one row"""
        path = write_matrix(np.array([1.0, 2.0]), temp_data_dir / "v.txt")
        assert path.read_text() == "1 2\n"

    @pytest.mark.unit
    def test_write_metadata(self, temp_data_dir):
        """Test numpy scalars, arrays and enums are serialised in key order"""
        meta = {"b": np.float64(0.5), "a": np.int64(3), "c": np.array([1, 2]), "d": BoundaryClass.ABSORBING}
        path = write_metadata(meta, temp_data_dir / "meta.json")
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert load_metadata(path) == {"a": 3, "b": 0.5, "c": [1, 2], "d": "absorbing"}

    @pytest.mark.unit
    def test_write_metadata_rejects_objects(self, temp_data_dir):
        """Test unknown objects are not silently stringified"""
        with pytest.raises(TypeError):
            write_metadata({"x": object()}, temp_data_dir / "bad.json")

    @pytest.mark.unit
    def test_write_text(self, temp_data_dir):
        """Test plain text output"""
        path = write_text("[run]\nseed = 1\n", temp_data_dir / "c.ini")
        assert path.read_text() == "[run]\nseed = 1\n"

    @pytest.mark.unit
    def test_write_csv_error_is_logged(self, temp_data_dir, mocker):
        """Test write failures are logged and re-raised"""
        mocker.patch.object(pd.DataFrame, "to_csv", side_effect=OSError("disk full"))
        logger = mocker.patch("splitstep.utils.file_utils.logger")
        with pytest.raises(OSError):
            write_csv(pd.DataFrame({"x": [1]}), temp_data_dir / "x.csv")
        logger.error.assert_called_once()

    @pytest.mark.unit
    def test_metadata_is_deterministic(self, temp_data_dir):
        """Test equal metadata gives byte-identical files"""
        meta = {"seed": 1, "values": [0.1, 0.2]}
        first = write_metadata(meta, temp_data_dir / "one.json").read_bytes()
        second = write_metadata(dict(reversed(list(meta.items()))), temp_data_dir / "two.json").read_bytes()
        assert first == second
        assert json.loads(first) == meta
