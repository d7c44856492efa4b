// Writes the synthetic sample dataset used by the docs and the test suite.

#include <iostream>

#include "organoquant/dataset.hpp"

int main(int argc, char** argv) {
    std::filesystem::path dir = argc > 1 ? argv[1] : "organoquant_demo";
    try {
        auto config = organoquant::synthetic::write_sample_dataset(dir);
        std::cout << config.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "organoquant-testdata: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
