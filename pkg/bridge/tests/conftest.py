"""Shared fixtures: a tiny offline sentence encoder built from scratch.

The whole directory is skipped when the bridge package is not
installed, so the core toolkit's suite runs standalone.
"""

import string

import pytest

neardup_bridge = pytest.importorskip("neardup_bridge")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A saved sentence-transformers model with random weights.

    Character-level WordPiece vocabulary and a one-layer encoder: small
    enough to build in-process, deterministic under the fixed torch
    seed, and fully offline.
    """
    import torch
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import Lowercase
    from tokenizers.pre_tokenizers import Whitespace
    from tokenizers.processors import TemplateProcessing
    from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

    try:
        from sentence_transformers.sentence_transformer.modules import (
            Pooling,
            Transformer,
        )
    except ImportError:
        from sentence_transformers.models import Pooling, Transformer
    from sentence_transformers import SentenceTransformer

    hf_dir = tmp_path_factory.mktemp("hf-model")
    alphabet = string.ascii_lowercase + string.digits
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    tokens += list(alphabet) + ["##" + c for c in alphabet]
    vocab = {t: i for i, t in enumerate(tokens)}
    backend = Tokenizer(
        WordPiece(vocab, unk_token="[UNK]", continuing_subword_prefix="##")
    )
    backend.normalizer = Lowercase()
    backend.pre_tokenizer = Whitespace()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(tokens),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=512,
    )
    BertModel(config).save_pretrained(hf_dir)
    tokenizer.save_pretrained(hf_dir)

    st_dir = tmp_path_factory.mktemp("st-model") / "tiny-encoder"
    word = Transformer(str(hf_dir), max_seq_length=128)
    pooling = Pooling(32, pooling_mode="mean")
    SentenceTransformer(modules=[word, pooling]).save(str(st_dir))
    return str(st_dir)
