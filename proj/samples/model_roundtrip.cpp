// Generates a random POSG, writes it in the text format, reads it back and
// checks that the text is reproduced exactly.

#include <iostream>
#include <string>

#include "iplite/environments/random_posg.hpp"
#include "iplite/model_io.hpp"

int main() {
    iplite::RandomPosgSpec spec;
    spec.states = 4;
    spec.actions = 2;
    spec.observations = 3;
    spec.seed = 7;
    const auto model = iplite::generate_random_posg(spec);

    const std::string text = iplite::model_to_string(model);
    const auto back = iplite::model_from_string(text);
    const bool same = iplite::model_to_string(back) == text;

    std::cout << text << "\nround trip " << (same ? "exact" : "MISMATCH") << '\n';
    return same ? 0 : 1;
}
