from __future__ import annotations

import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "red", "green", "blue", "apple", "pear", "berry", "pie", "tart", "jam",
    "keyboard", "tablet", "wireless", "battery", "slim", "travel",
    "item0", "item1", "item2", "item3",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A minimal local BERT + WordPiece tokenizer so inference runs offline."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    model_dir = tmp_path_factory.mktemp("tiny-encoder")
    (model_dir / "vocab.txt").write_text("\n".join(VOCAB) + "\n")
    torch.manual_seed(0)
    config = BertConfig(vocab_size=len(VOCAB), hidden_size=16,
                        num_hidden_layers=1, num_attention_heads=2,
                        intermediate_size=32, max_position_embeddings=64)
    BertModel(config).save_pretrained(model_dir)
    BertTokenizerFast(vocab_file=str(model_dir / "vocab.txt"),
                      model_max_length=64).save_pretrained(model_dir)
    return str(model_dir)
