#include "augkit/cli.hpp"

int main(int argc, char** argv) {
    return augkit::cli::run(argc, argv);
}
