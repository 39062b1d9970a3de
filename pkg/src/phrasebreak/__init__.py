"""Phrase-break prediction toolkit for TTS front-ends.

Derives Break/No-Break labels from forced alignments, trains a BLSTM and a
transformer-encoder token classifier, punctuates raw text with predicted
breaks, and analyzes ABX listening-test responses.
"""

__version__ = "0.1.0"

from phrasebreak.textproc import B, NB

__all__ = ["B", "NB", "__version__"]
