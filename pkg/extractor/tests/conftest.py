import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

from model_fixture import MAX_PIECES, WORDS


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A deterministic, randomly initialized miniature BERT with WordPiece."""
    out = tmp_path_factory.mktemp("tiny-bert")
    tokenizer = BertTokenizer(vocab={w: i for i, w in enumerate(WORDS)},
                              do_lower_case=True, model_max_length=MAX_PIECES)
    tokenizer.save_pretrained(out)
    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(WORDS),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=MAX_PIECES,
    )
    BertModel(config).save_pretrained(out)
    return out


@pytest.fixture
def manifest_rows():
    """20 sentences; targets include the two-piece words run+##ning, jump+##ing."""
    sentences = [
        (["the", "cat", "sat", "on", "the", "mat"], 1),
        (["a", "dog", "ran", "near", "the", "water"], 1),
        (["the", "bird", "flew", "on", "the", "sky"], 1),
        (["a", "fish", "swam", "near", "the", "rock"], 1),
        (["the", "green", "tree", "sat", "near", "grass"], 2),
        (["a", "blue", "bird", "sat", "on", "the", "tree"], 2),
        (["the", "red", "cat", "ran", "near", "the", "dog"], 2),
        (["a", "big", "dog", "swam", "on", "the", "water"], 2),
        (["the", "small", "fish", "flew", "near", "the", "mat"], 2),
        (["a", "fast", "cat", "sat", "near", "the", "rock"], 2),
        (["the", "slow", "dog", "sat", "on", "grass"], 2),
        (["the", "cat", "running", "near", "the", "water"], 2),
        (["a", "dog", "jumping", "on", "the", "mat"], 2),
        (["the", "old", "bird", "sat", "near", "water"], 2),
        (["a", "new", "fish", "swam", "on", "the", "sky"], 2),
        (["the", "big", "tree", "sat", "near", "the", "rock"], 2),
        (["a", "small", "cat", "ran", "on", "the", "grass"], 2),
        (["the", "fast", "bird", "flew", "near", "the", "tree"], 1),
        (["a", "slow", "fish", "swam", "near", "the", "mat"], 1),
        (["the", "green", "dog", "jumping", "near", "water"], 3),
    ]
    return [(i, tokens, idx) for i, (tokens, idx) in enumerate(sentences)]
