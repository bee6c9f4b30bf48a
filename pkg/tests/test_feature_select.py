import numpy as np
import pytest

from waveseq.feature_select import (attribution_to_csv, elastic_net_loss, feature_attribution, nonzero_percentage)
from waveseq.seq2seq.model import Seq2Seq


def test_elastic_net_loss():
    y = np.array([1.0, 2.0])
    assert elastic_net_loss(y, y, [1.0, -1.0], 1.0, 1.0) == 4.0
    assert elastic_net_loss([0.0, 0.0], y, [5.0], 0.0, 0.0) == 2.5
    assert elastic_net_loss(y, y, [1, -2], 0, 0.1) < elastic_net_loss(y, y, [1, -2], 0, 0.2)
    with pytest.raises(ValueError):
        elastic_net_loss([1.0], y, [], 0, 0)


def test_nonzero_percentage():
    rep = nonzero_percentage(np.array([0.5, 1e-5, -0.2]))
    assert rep.nonzero_vars == 2 and rep.total_vars == 3
    assert rep.nonzero_pct == pytest.approx(66.67, abs=0.01)
    assert nonzero_percentage(np.zeros(4)).nonzero_pct == 0.0


def test_attribution_hand_built(tmp_path):
    m = Seq2Seq(2, 1, 1, 1)
    m.params["enc0.Wx"][:] = [[0.5, -0.5, 0.0, 1.0], [0.1, 0.0, -0.2, 0.0]]
    ranking = feature_attribution(m, ["hs", "dpd"])
    assert ranking[0][0] == "hs" and ranking[0][1] == pytest.approx(2.0)
    assert ranking[1][1] == pytest.approx(0.3)
    m.params["enc0.Wx"][0] = 0.0
    assert feature_attribution(m)[-1] == ("x0", 0.0)
    rep = nonzero_percentage(m.params, model=m)
    assert rep.total_vars == len(m.params) and len(rep.feature_mass) == 2
    attribution_to_csv(ranking, tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().splitlines()[1].startswith("1,hs,")
    with pytest.raises(ValueError):
        feature_attribution(m, ["one"])
