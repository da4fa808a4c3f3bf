// Test helper for the CLI pipeline run.
//   fixture_tool corpus <dir>        registry.json + raw.jsonl from the synthetic corpus
//   fixture_tool crawl <cli> <dir>   serves the fixture site and runs `<cli> crawl` against it
#include "corpus.hpp"
#include "fixture_server.hpp"

#include "newstrust/jsonl.hpp"
#include "newstrust/util.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

using namespace newstrust;
using namespace newstrust::testing;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "";
    try {
        if (mode == "corpus" && argc == 3) {
            const fs::path dir = argv[2];
            fs::create_directories(dir);
            const auto corpus = make_corpus({.articles_per_source = 10});
            corpus.registry.save(dir / "registry.json");
            write_jsonl(dir / "raw.jsonl", corpus.articles);
            return 0;
        }
        if (mode == "crawl" && argc == 4) {
            const std::string cli = argv[2];
            const fs::path dir = argv[3];
            fs::create_directories(dir);
            const std::string domain = "fixture-news.example";
            FixtureServer site;
            Registry reg;
            reg.upsert({domain, 80, Topic::political, "en", false, std::nullopt});
            reg.save(dir / "site_registry.json");
            write_file(dir / "crawl.json", nlohmann::json(site.crawl_config(domain, 0)).dump(2));
            write_file(dir / "rules.json", nlohmann::json(site.rules(domain)).dump(2));
            const auto cmd = "\"" + cli + "\" crawl --config \"" + (dir / "crawl.json").string() + "\" --out \"" +
                             (dir / "warcs").string() + "\" --registry \"" + (dir / "site_registry.json").string() +
                             "\" > \"" + (dir / "crawl_job.json").string() + "\"";
            const int rc = std::system(cmd.c_str());
            return rc == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "fixture_tool: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "usage: fixture_tool corpus <dir> | crawl <cli> <dir>\n";
    return 2;
}
