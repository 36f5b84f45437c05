#include "alloyloc/cli.hpp"

int main(int argc, char** argv) {
    return alloyloc::cli::run(argc, argv);
}
