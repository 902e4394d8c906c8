import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from structkv.chunking import ChunkConfig, partition_chunks
from structkv.lexer import SourceFile, tokenize


@pytest.fixture
def small_chunk_cfg():
    """Chunking config that keeps desk-scale fixtures in one chunk each."""
    return ChunkConfig(min_chunk_tokens=1, target_chunk_tokens=512, max_chunk_tokens=4096)


def single_chunk(code: str, path: str = "t.py"):
    """(chunk, tokens) for a snippet small enough to be one chunk."""
    src = SourceFile(path, code)
    toks = tokenize(src)
    # min == max forces every fragment of a desk-scale snippet to merge
    chunks = partition_chunks(
        src,
        toks,
        ChunkConfig(min_chunk_tokens=4096, target_chunk_tokens=4096, max_chunk_tokens=4096),
    )
    assert len(chunks) == 1, f"expected one chunk, got {len(chunks)}"
    return chunks[0], toks
