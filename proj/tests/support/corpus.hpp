#pragma once

#include "newstrust/extractor.hpp"
#include "newstrust/registry.hpp"
#include "newstrust/rng.hpp"

#include <map>
#include <string>
#include <vector>

namespace newstrust::testing {

// Lowercase pronounceable pseudo-word, 2-4 syllables.
std::string pseudo_word(Rng& rng);
// `n` distinct pseudo-words, none present in `exclude`.
std::vector<std::string> distinct_words(Rng& rng, std::size_t n, std::vector<std::string>* exclude = nullptr);

// Capitalized sentences ending in '.', grouped three to five per line, with
// exactly `words` words in total.
std::string compose_text(Rng& rng, const std::vector<std::string>& vocab_a, const std::vector<std::string>& vocab_b,
                         std::size_t words);

struct CorpusOptions {
    std::size_t articles_per_source = 100;  // one source per (level, topic) cell
    double separation = 0.70;               // unique share of each class vocabulary
    std::size_t vocabulary = 100;           // words per class vocabulary
    std::size_t min_words = 240;
    std::size_t max_words = 320;
    bool boilerplate = true;
    std::uint64_t seed = 7;
};

struct SyntheticCorpus {
    Registry registry;
    std::vector<RawArticle> articles;
    // domain -> planted boilerplate sentences
    std::map<std::string, std::vector<std::string>> planted;
};

// Five trust-level styles by four topic vocabularies. Each token comes from
// the article's topic vocabulary or its level's style vocabulary with equal
// odds; the non-unique part of every vocabulary is shared by all classes.
SyntheticCorpus make_corpus(const CorpusOptions& options = {});

std::string cell_domain(int level, Topic topic);

}  // namespace newstrust::testing
