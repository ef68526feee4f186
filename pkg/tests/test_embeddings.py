import numpy as np
import pytest

from chronotag.corpus import PAD_ID, Vocabulary
from chronotag.embeddings import init_year_table, load_word_table
from chronotag.errors import DataError, ParseError
from chronotag.mathcore import Rng


@pytest.fixture
def vocab():
    return Vocabulary(["cat", "dog", "mouse"])


class TestLoadWordTable:
    def test_file_vector_passthrough(self, tmp_path, vocab):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 0.1 0.2\n")
        table = load_word_table(path, vocab, 2, Rng(0))
        np.testing.assert_allclose(table.matrix[vocab.word_to_id["cat"]], [0.1, 0.2])

    def test_header_line_tolerated(self, tmp_path, vocab):
        path = tmp_path / "vecs.txt"
        path.write_text("3 2\ncat 0.1 0.2\n")
        table = load_word_table(path, vocab, 2, Rng(0))
        np.testing.assert_allclose(table.matrix[vocab.word_to_id["cat"]], [0.1, 0.2])

    def test_missing_word_gets_reproducible_nonzero_row(self, tmp_path, vocab):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 0.1 0.2\n")
        t1 = load_word_table(path, vocab, 2, Rng(5))
        t2 = load_word_table(path, vocab, 2, Rng(5))
        dog = vocab.word_to_id["dog"]
        assert np.any(t1.matrix[dog] != 0.0)
        assert np.array_equal(t1.matrix[dog], t2.matrix[dog])

    def test_distinct_words_distinct_vectors(self, vocab):
        table = load_word_table(None, vocab, 8, Rng(1))
        dog = table.matrix[vocab.word_to_id["dog"]]
        mouse = table.matrix[vocab.word_to_id["mouse"]]
        assert not np.array_equal(dog, mouse)

    def test_oov_vector_independent_of_vocab_order(self):
        a = Vocabulary(["alpha", "beta"])
        b = Vocabulary(["beta", "alpha"])
        ta = load_word_table(None, a, 4, Rng(9))
        tb = load_word_table(None, b, 4, Rng(9))
        np.testing.assert_array_equal(
            ta.matrix[a.word_to_id["beta"]], tb.matrix[b.word_to_id["beta"]]
        )

    def test_pad_row_zero(self, vocab):
        table = load_word_table(None, vocab, 4, Rng(2))
        assert np.all(table.matrix[PAD_ID] == 0.0)

    def test_dimension_mismatch_names_word(self, tmp_path, vocab):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 0.1 0.2 0.3\n")
        with pytest.raises(ParseError, match="cat"):
            load_word_table(path, vocab, 2, Rng(0))

    def test_duplicate_last_wins(self, tmp_path, vocab, caplog):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 0.1 0.2\ncat 0.9 0.8\n")
        with caplog.at_level("WARNING"):
            table = load_word_table(path, vocab, 2, Rng(0))
        np.testing.assert_allclose(table.matrix[vocab.word_to_id["cat"]], [0.9, 0.8])
        assert any("duplicate" in r.message for r in caplog.records)

    def test_missing_file_rejected(self, vocab):
        with pytest.raises(DataError):
            load_word_table("/no/such/file.txt", vocab, 2, Rng(0))

    def test_not_trainable(self, vocab):
        assert load_word_table(None, vocab, 4, Rng(0)).trainable is False


class TestYearTable:
    def test_default_span_is_200_rows(self):
        table = init_year_table(1810, 2009, 300, Rng(0))
        assert table.matrix.shape == (200, 300)
        assert np.abs(table.matrix).max() <= np.sqrt(6.0 / (200 + 300))

    def test_single_year(self):
        table = init_year_table(2000, 2000, 8, Rng(0))
        assert table.matrix.shape == (1, 8)
        assert table.contains(2000) and not table.contains(1999)

    def test_inverted_range_rejected(self):
        with pytest.raises(ValueError):
            init_year_table(2009, 1810, 8, Rng(0))

    def test_row_lookup(self):
        table = init_year_table(1900, 1909, 4, Rng(3))
        np.testing.assert_array_equal(table.row(1905), table.matrix[5])
        with pytest.raises(ValueError):
            table.row(1890)

    def test_trainable_flag(self):
        assert init_year_table(1900, 1901, 2, Rng(0)).trainable is True
