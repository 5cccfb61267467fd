#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dialeval/corpus.hpp"
#include "dialeval/llmjudge.hpp"

// Recorded-style judge replies and the score each must parse to.
struct ParserFixture {
  std::string reply;
  dialeval::Level level;
  std::optional<double> value;  // nullopt: unparseable
  dialeval::ParseMethod method = dialeval::ParseMethod::single_integer;
};

inline const std::vector<ParserFixture>& parser_fixtures() {
  using dialeval::Level;
  using dialeval::ParseMethod;
  static const std::vector<ParserFixture> f = {
      {"4", Level::turn, 4.0},
      {"5", Level::turn, 5.0},
      {"1", Level::turn, 1.0},
      {" 3\n", Level::turn, 3.0},
      {"Score: 2", Level::turn, 2.0},
      {"I would rate it 3 out of 5.", Level::turn, 3.0},
      {"4 out of 5", Level::turn, 4.0},
      {"4/5", Level::turn, 4.0},
      {"On a scale of 1-5, I would give this response a 4.", Level::turn, 4.0},
      {"On a scale of 1 to 5, this deserves a 2.", Level::turn, 2.0},
      {"Rating: 5.", Level::turn, 5.0},
      {"The response is appropriate. 4", Level::turn, 4.0},
      {"I can't evaluate this conversation.", Level::turn, std::nullopt},
      {"I'm sorry, but as an AI I cannot provide a rating.", Level::turn, std::nullopt},
      {"3.5", Level::turn, std::nullopt},
      {"10", Level::turn, std::nullopt},
      {"0", Level::turn, std::nullopt},
      {"Turn 1: 4\nTurn 2: 2", Level::dialogue, 3.0, ParseMethod::per_turn_average},
      {"Turn 1: 5\nTurn 2: 4\nTurn 3: 3", Level::dialogue, 4.0, ParseMethod::per_turn_average},
      {"Response 1: 2, Response 2: 3", Level::dialogue, 2.5, ParseMethod::per_turn_average},
      {"3", Level::dialogue, 3.0},
      {"Overall I rate the dialogue 4 out of 5.", Level::dialogue, 4.0},
      {"The conversation is incoherent; I cannot score it.", Level::dialogue, std::nullopt},
      {"2\n4", Level::dialogue, 3.0, ParseMethod::per_turn_average},
  };
  return f;
}
