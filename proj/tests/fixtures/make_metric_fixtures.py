#!/usr/bin/env python3
"""Regenerates metric_pairs.json and porter_stems.json from offline reference scorers.

Requires: sacrebleu, nltk, pycocoevalcap. The C++ tests never run this script;
they only read the frozen JSON it writes.
"""
import json
import logging
import pathlib

import sacrebleu
from nltk.stem.porter import PorterStemmer
from nltk.translate import meteor_score as nltk_meteor
from pycocoevalcap.rouge.rouge import Rouge

HERE = pathlib.Path(__file__).resolve().parent

PAIRS = [
    ("returns the user id", "returns the user name"),
    ("returns the user name", "returns the user name"),
    ("foo", "foo"),
    ("creates a new instance of the parser", "constructs a parser instance"),
    ("sets the maximum number of retries", "set the maximum retry count"),
    ("checks whether the given string is empty", "returns true if the string is empty"),
    ("closes the underlying stream", "closes the stream and releases resources"),
    ("this method is used to initialize the cache before use", "initializes the cache"),
    ("the list must not be null", "list should not be null or empty"),
    ("adds all elements to the collection", "adds the given elements to this collection"),
    ("computes the hash code of the object", "returns a hash code value for the object"),
    ("call this after the connection is opened", "must be called after opening the connection"),
    ("iterates over the nodes and removes the expired ones", "removes expired nodes from the tree"),
    ("converts the date to a string using the default format", "formats the date as a string"),
    ("parses the configuration file and loads the settings", "loads settings from the configuration file"),
    ("returns the number of elements in this list", "returns the number of elements in this list"),
    ("throws an exception if the index is out of range", "index must be within the bounds of the array"),
    ("provided for backward compatibility with older clients", "kept for compatibility with old clients"),
    ("uses a binary search to find the key", "finds the key by binary search over the sorted keys"),
    ("reads bytes from the input stream into the buffer", "reads data from the stream into the given buffer"),
    ("updates the running totals", "completely unrelated words here"),
    ("a b c d", "a c d"),
    ("a c d", "a b c d"),
    ("the value is never negative", "value is non-negative after the call"),
    ("registers the listener for change events", "registering listeners for changed events"),
    ("the running jobs were stopped", "stops running jobs"),
]

STEM_WORDS = """
caresses ponies ties caress cats feed agreed plastered bled motoring sing
conflated troubled sized hopping tanned falling hissing fizzed failing filing
happy sky relational conditional rational valenci hesitanci digitizer
conformabli radicalli differentli vileli analogousli vietnamization predication
operator feudalism decisiveness hopefulness callousness formaliti sensitiviti
sensibiliti triplicate formative formalize electriciti electrical hopeful
goodness revival allowance inference airliner gyroscopic adjustable defensible
irritant replacement adjustment dependent adoption homologou communism activate
angulariti homologous effective bowdlerize probate rate cease controll roll
generalizations oscillators running returns registers registering listeners
changed events initializes initialize configuration settings compatibility
as is a by yes toy syzygy enjoy spy fly dying lying news proceed
""".split()


def tokens(s):
    return s.split()


def bleu_sentence(cand, ref):
    b = sacrebleu.metrics.BLEU(
        tokenize="none", smooth_method="add-k", smooth_value=1,
        effective_order=False, lowercase=False,
    )
    return b.sentence_score(cand, [ref]).score / 100.0


def bleu_corpus(cands, refs):
    b = sacrebleu.metrics.BLEU(
        tokenize="none", smooth_method="none", effective_order=False,
        lowercase=False,
    )
    return b.corpus_score(cands, [refs]).score / 100.0


class NoSynonyms:
    def synsets(self, _word):
        return []


STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def meteor(cand, ref):
    return nltk_meteor.single_meteor_score(
        tokens(ref), tokens(cand), stemmer=STEMMER, wordnet=NoSynonyms(),
    )


def rouge_l(cand, ref):
    return Rouge().calc_score([cand], [ref])


def main():
    logging.getLogger("sacrebleu").setLevel(logging.ERROR)
    pairs = []
    for cand, ref in PAIRS:
        pairs.append({
            "candidate": tokens(cand),
            "reference": tokens(ref),
            "bleu4": bleu_sentence(cand, ref),
            "meteor": meteor(cand, ref),
            "rouge_l": rouge_l(cand, ref),
        })
    doc = {
        "reference_scorers": {
            "bleu4": f"sacrebleu {sacrebleu.__version__} sentence_score tokenize=none smooth=add-k(1) effective_order=False",
            "bleu4_corpus": f"sacrebleu {sacrebleu.__version__} corpus_score tokenize=none smooth=none",
            "meteor": "nltk single_meteor_score alpha=0.9 beta=3 gamma=0.5, PorterStemmer ORIGINAL_ALGORITHM, no synonym stage",
            "rouge_l": "pycocoevalcap Rouge beta=1.2",
        },
        "smoothing_id": "add-one(n>1)",
        "pairs": pairs,
        "corpus_bleu4": bleu_corpus([c for c, _ in PAIRS], [r for _, r in PAIRS]),
    }
    (HERE / "metric_pairs.json").write_text(json.dumps(doc, indent=1) + "\n")

    stems = {w: STEMMER.stem(w) for w in STEM_WORDS}
    (HERE / "porter_stems.json").write_text(
        json.dumps({"reference_scorers": "nltk PorterStemmer ORIGINAL_ALGORITHM", "stems": stems}, indent=1) + "\n")


if __name__ == "__main__":
    main()
