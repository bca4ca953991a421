import json

import numpy as np
import pytest

from ionprof.domain import (
    ChannelConfig,
    IonSpecies,
    assemble_features,
    assemble_features_batch,
    ion_by_name,
    ion_catalog,
    load_catalog,
    save_catalog,
)


class TestIonCatalog:
    def test_exactly_five_species(self):
        assert len(ion_catalog()) == 5

    @pytest.mark.parametrize(
        "name,sigma,epsilon,charge",
        [
            ("Na", 2.1600, 0.3526, +1),
            ("Cl", 4.8305, 0.0128, -1),
            ("Mg", 2.1200, 0.8750, +2),
            ("Li", 1.4094, 0.3367, +1),
            ("K", 2.8384, 0.4297, +1),
        ],
    )
    def test_tabulated_values(self, name, sigma, epsilon, charge):
        ion = ion_by_name(name)
        assert ion.sigma == sigma
        assert ion.epsilon == epsilon
        assert ion.charge == charge

    def test_names_unique(self):
        names = [ion.name for ion in ion_catalog()]
        assert len(set(names)) == len(names)

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            ion_by_name("Xx")

    def test_json_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "catalog.json"
        save_catalog(ion_catalog(), path)
        loaded = load_catalog(path)
        assert loaded == ion_catalog()

    def test_override_file_duplicate_names_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        entry = {"name": "Na", "sigma": 1.0, "epsilon": 1.0, "charge": 1}
        path.write_text(json.dumps([entry, entry]))
        with pytest.raises(ValueError, match="unique"):
            load_catalog(path)


class TestInvariants:
    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            IonSpecies("X", -1.0, 0.1, 1)

    def test_epsilon_positive(self):
        with pytest.raises(ValueError):
            IonSpecies("X", 1.0, 0.0, 1)

    def test_charge_nonzero_integer(self):
        with pytest.raises(ValueError):
            IonSpecies("X", 1.0, 1.0, 0)
        with pytest.raises(ValueError):
            IonSpecies("X", 1.0, 1.0, 1.5)

    def test_channel_config_positive(self):
        ion = ion_by_name("Na")
        with pytest.raises(ValueError):
            ChannelConfig(ion, 0.0, 1.0)
        with pytest.raises(ValueError):
            ChannelConfig(ion, 1.0, -2.0)

    def test_off_grid_values_accepted(self):
        cfg = ChannelConfig(ion_by_name("Na"), 1.234, 2.567)
        assert cfg.half_width == 0.617


class TestAssembleFeatures:
    def test_na_example(self):
        cfg = ChannelConfig(ion_by_name("Na"), 2.0, 2.0)
        np.testing.assert_array_equal(
            assemble_features(cfg, 0.5), [0.5, 2.16, 0.3526, 2.0, 2.0, 1.0]
        )

    def test_cl_at_zero(self):
        cfg = ChannelConfig(ion_by_name("Cl"), 1.0, 1.0)
        np.testing.assert_array_equal(
            assemble_features(cfg, 0.0), [0.0, 4.8305, 0.0128, 1.0, 1.0, -1.0]
        )

    def test_mg_example(self):
        cfg = ChannelConfig(ion_by_name("Mg"), 3.0, 3.6)
        np.testing.assert_array_equal(
            assemble_features(cfg, 1.5), [1.5, 2.12, 0.875, 3.0, 3.6, 2.0]
        )

    def test_negative_r_rejected(self):
        cfg = ChannelConfig(ion_by_name("Na"), 2.0, 2.0)
        with pytest.raises(ValueError):
            assemble_features(cfg, -0.1)
        with pytest.raises(ValueError):
            assemble_features_batch(cfg, np.array([0.1, -0.2]))

    def test_pure_function(self):
        cfg = ChannelConfig(ion_by_name("K"), 1.5, 0.9)
        a = assemble_features(cfg, 0.7)
        b = assemble_features(cfg, 0.7)
        np.testing.assert_array_equal(a, b)

    def test_batch_matches_scalar(self):
        cfg = ChannelConfig(ion_by_name("Li"), 2.2, 1.8)
        r = np.array([0.0, 0.3, 1.1])
        batch = assemble_features_batch(cfg, r)
        for i, ri in enumerate(r):
            np.testing.assert_array_equal(batch[i], assemble_features(cfg, ri))
