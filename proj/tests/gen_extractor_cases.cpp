// Writes tests/fixtures/extractor_cases.jsonl: each input with the items the
// reference parser derives from it. Rerun only when adding cases.

#include "reference_parser.hpp"

#include <nlohmann/json.hpp>

#include <iostream>
#include <string>
#include <vector>

int main() {
  const std::vector<std::string> cases = {
      // well-formed
      R"([["Paris","capital of","France"]])",
      R"([["Mario Camerini","directed","Il Seduttore"],["The film","starred","Sophia Loren"]])",
      R"([])",
      R"([[]])",
      R"([["Stanley Cup","won by"]])",
      R"(["Paris","capital of","France"])",
      R"([["A","r1","B"],["C","r2","D"]])",
      R"([["it","won","Cup"],["Flyers","won","Cup"]])",
      R"([["A","r","B"],["it","r","C"],["D","r","E"]])",
      R"([ [ "Bernie Parent" , "played for" , "Philadelphia Flyers" ] ])",
      // commas and brackets inside quoted fields
      R"([["Bob, Jr.","born in","Ohio"]])",
      R"([["Smith, John","married","Doe, Jane"]])",
      R"([["A [disambiguation]","is","B"]])",
      R"([["x","said \"hi, there\"","y"]])",
      // smart quotes
      "[[\xE2\x80\x9C" "A" "\xE2\x80\x9D,\xE2\x80\x98" "rel" "\xE2\x80\x99,\"B\"]",
      "[[\xE2\x80\x9C" "Philadelphia Flyers" "\xE2\x80\x9D, \xE2\x80\x9C" "won" "\xE2\x80\x9D, \xE2\x80\x9C" "Stanley Cup" "\xE2\x80\x9D]]",
      "[[\xC2\xAB" "Le Monde" "\xC2\xBB, \"published in\", \"Paris\"]]",
      "[[\xE2\x80\x98" "O\xE2\x80\x99" "Brien\xE2\x80\x99, 'born in', 'Dublin']]",
      // single quotes and apostrophes
      R"([['Paris','capital of','France']])",
      R"([['O'Brien','born in','Dublin']])",
      R"([["Rock 'n' roll","originated in","United States"]])",
      R"([['A', "mixed quotes", 'B']])",
      // escapes
      R"([["line\nbreak","has","tab\tchar"]])",
      R"([["Café","serves","coffee"]])",
      R"([["back\\slash","in","path"]])",
      R"([["bad \uZZZZ escape","kept","literally"]])",
      R"([["trailing backslash","ends","here\)",
      // bare fields
      R"([[Paris, capital of, France]])",
      R"([[Paris, "capital of", France]])",
      R"([[null, "is", "nothing"]])",
      R"([["null", "is", "a string"]])",
      // truncated / unbalanced
      R"([["Paris","capital of","France")",
      R"([["Paris","capital of","France"],["Berlin","capital of")",
      R"([["Paris","capital of)",
      R"([["A","r","B"]]])",
      R"(]]["A","r","B"])",
      // junk around lists
      R"(Output: [["Paris","capital of","France"]] done.)",
      R"(Sure! Here are the triplets:
[["Ada Lovelace","wrote","notes"]])",
      R"(no brackets at all)",
      R"()",
      R"([["A","r","B"]] [["C","r","D"]])",
      // odd arities and nesting
      R"([["A","r","B","extra"]])",
      R"([["only one"]])",
      R"([[["A","r","B"]],[["C","r","D"]]])",
      R"([["A","r","B"],"stray",["C","r","D"]])",
      R"([[], ["A","r","B"], []])",
      // empty and pronoun fields
      R"([["","r","B"]])",
      R"([["A","r","   "]])",
      R"([["They","founded","Company"],["Italy","borders","France"]])",
      R"([["Apple Inc.", "founded by", "HIS"], ["This", "is", "that"]])",
  };
  for (const auto& raw : cases) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : ref::parse(raw)) items.push_back({{"kind", it.kind}, {"fields", it.fields}});
    std::cout << nlohmann::json{{"raw", raw}, {"items", items}}.dump() << '\n';
  }
  std::cerr << cases.size() << " cases\n";
}
