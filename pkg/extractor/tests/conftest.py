import pytest

VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "the",
    "cat",
    "sat",
    "on",
    "mat",
    "dog",
    "ran",
    "home",
    "hello",
    "world",
]


def write_vocab(path, tokens):
    path.write_text("".join(t + "\n" for t in tokens), encoding="utf-8")


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    """Tiny randomly initialized encoder saved as a local checkpoint."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    root = tmp_path_factory.mktemp("ckpt")
    write_vocab(root / "vocab.txt", VOCAB)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(root)
    BertTokenizer(str(root / "vocab.txt")).save_pretrained(root)
    return root


@pytest.fixture
def messages(tmp_path):
    """Write (user, text) pairs as a TSV input file."""

    def build(lines, name="msgs.tsv"):
        path = tmp_path / name
        path.write_text(
            "".join(f"{u}\t{t}\n" for u, t in lines), encoding="utf-8"
        )
        return path

    return build
