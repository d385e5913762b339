import json
import math

import numpy as np
import pytest

from aoicut.exceptions import ConfigError
from aoicut.output import plain, render, render_csv, render_json, write

rows = [
    {"gamma": 0.1, "lambda_star": 1.0499999999999998, "zero_wait": False, "bracket": None},
    {"gamma": math.inf, "lambda_star": np.float64(2.0), "zero_wait": np.bool_(True), "bracket": 3},
]


def test_plain_numpy_scalars():
    assert type(plain(np.float64(1.5))) is float
    assert type(plain(np.int64(3))) is int
    assert plain(np.bool_(False)) is False
    assert plain("x") == "x"


def test_csv():
    text = render_csv(rows)
    assert text == (
        "gamma,lambda_star,zero_wait,bracket\n"
        "0.1,1.0499999999999998,false,\n"
        "inf,2.0,true,3\n"
    )


def test_csv_column_order():
    assert render_csv(rows, ["zero_wait", "gamma"]).splitlines()[0] == "zero_wait,gamma"


def test_json():
    data = json.loads(render_json(rows))
    assert data[0] == {"gamma": 0.1, "lambda_star": 1.0499999999999998, "zero_wait": False, "bracket": None}
    assert data[1]["gamma"] == "inf"
    assert data[1]["zero_wait"] is True


def test_csv_and_json_agree():
    csv_values = render(rows, "csv").splitlines()[1].split(",")
    json_values = json.loads(render(rows, "json"))[0]
    assert float(csv_values[1]) == json_values["lambda_star"]


def test_invalid_format():
    with pytest.raises(ConfigError):
        render(rows, "xml")


def test_write(tmp_path, capsys):
    path = tmp_path / "out" / "rows.csv"
    write("a\n1\n", path)
    assert path.read_text(encoding="utf-8") == "a\n1\n"
    write("b\n", None)
    assert capsys.readouterr().out == "b\n"
