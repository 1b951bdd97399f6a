import pytest

from embx import ConfigError, compute_batch_size


class TestFormula:
    def test_reference_budget(self):
        # floor(11.5e9 / (4 * 1 * 768 * 512)) = 7311
        assert compute_batch_size(12e9, 0.5e9, 32, 1, 768, 512) == 7311

    def test_exactly_one_sequence_fits(self):
        per_sequence = 4 * 1 * 16 * 8
        assert compute_batch_size(1000 + per_sequence, 1000, 32, 1, 16, 8) == 1

    def test_floors_partial_sequences(self):
        per_sequence = 4 * 1 * 16 * 8
        budget = 1000 + int(2.5 * per_sequence)
        assert compute_batch_size(budget, 1000, 32, 1, 16, 8) == 2

    def test_half_precision_doubles_capacity(self):
        full = compute_batch_size(12e9, 0.5e9, 32, 1, 768, 512)
        half = compute_batch_size(12e9, 0.5e9, 16, 1, 768, 512)
        assert half == 2 * full + 1  # the freed remainder fits one more


class TestRejections:
    def test_budget_equal_to_model_size(self):
        with pytest.raises(ConfigError, match="exceed"):
            compute_batch_size(1e9, 1e9, 32, 1, 768, 512)

    def test_budget_below_model_size(self):
        with pytest.raises(ConfigError, match="exceed"):
            compute_batch_size(1e9, 2e9, 32, 1, 768, 512)

    def test_gap_below_one_sequence_names_max_tokens(self):
        with pytest.raises(ConfigError, match="max_tokens"):
            compute_batch_size(1000 + 100, 1000, 32, 1, 768, 512)

    @pytest.mark.parametrize("position", range(6))
    def test_nonpositive_argument(self, position):
        args = [12e9, 0.5e9, 32, 1, 768, 512]
        args[position] = 0
        with pytest.raises(ConfigError, match="positive"):
            compute_batch_size(*args)
