import json

import pytest

from mvil.datasets import write_synthetic


@pytest.fixture
def tiny_experiment(tmp_path):
    """A 3-view synthetic dataset on disk plus a fast config file."""
    data_dir = tmp_path / "data"
    write_synthetic(data_dir, views=3, n=90, classes=3, seed=0)
    config = {
        "dataset": str(data_dir),
        "views": ["view_0.txt", "view_1.txt", "view_2.txt"],
        "k": 5,
        "learning_rate": 0.05,
        "hidden_dim": 8,
        "beta": 0.01,
        "epsilon": 0.01,
        "theta": 0.1,
        "epochs_per_view": 15,
        "seed": 1,
        "label_fraction": 0.1,
        "output": str(tmp_path / "out"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    return {"config": config, "config_path": config_path, "tmp_path": tmp_path}
