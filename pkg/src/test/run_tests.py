"""
Script to run the unit tests of the phase-field simulator.
The desk-scale benchmark runs in test_benchmarks.py only execute with --benchmarks.
"""
import unittest
import sys
import os

TEST_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(TEST_DIR, '..'))

BENCHMARK_FLAG = "COSSERAT_PF_BENCHMARKS"


def _report(result) -> int:
    print()
    print("=" * 70)
    print("TEST SUMMARY")
    print("=" * 70)
    print(f"Executed tests: {result.testsRun}")
    print(f"Skipped: {len(result.skipped)}")
    print(f"Successful: {result.testsRun - len(result.failures) - len(result.errors) - len(result.skipped)}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")
    for title, entries in (("Test failures", result.failures), ("Tests with errors", result.errors)):
        if entries:
            print(f"\n{title}:")
            for test, _ in entries:
                print(f"  - {test}")
    return 0 if result.wasSuccessful() else 1


def run_all_tests(pattern: str = 'test*.py') -> int:
    """Discover and execute every test module next to this script"""
    suite = unittest.TestLoader().discover(TEST_DIR, pattern=pattern, top_level_dir=TEST_DIR)
    print("=" * 70)
    print("EXECUTION OF COSSERAT-PF TESTS")
    if os.environ.get(BENCHMARK_FLAG) != "1":
        print(f"(benchmark runs skipped, set {BENCHMARK_FLAG}=1 or pass --benchmarks)")
    print("=" * 70)
    print()
    return _report(unittest.TextTestRunner(verbosity=2).run(suite))


def run_specific_test_module(module_name: str) -> int:
    """
    Execute a specific test module by name
    Args:
        module_name (str): dotted name, e.g. test_solver or test_solver.TestLoadLoop
    Returns:
        int: 0 if all tests passed, 1 otherwise
    """
    try:
        suite = unittest.TestLoader().loadTestsFromName(module_name)
    except (ImportError, AttributeError) as e:
        print(f"Error in loading {module_name}: {e}")
        return 1
    print(f"Test execution for: {module_name}")
    print("-" * 50)
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return 0 if result.wasSuccessful() else 1


def run_coverage_report() -> int:
    """
    Execute the tests with coverage measurement of the engine, cli and common packages
    Returns:
        int: exit code of the test run, 1 if coverage is not installed
    """
    try:
        import coverage
    except ImportError:
        print("coverage is not installed")
        return 1
    cov = coverage.Coverage(source=["engine", "cli", "common"])
    cov.start()
    exit_code = run_all_tests()
    cov.stop()
    cov.save()
    print("\n" + "=" * 70)
    print("COVERAGE REPORT")
    print("=" * 70)
    cov.report(show_missing=True)
    cov.html_report(directory='htmlcov')
    print("\nHTML report in: htmlcov/index.html")
    return exit_code


if __name__ == "__main__":
    import argparse
    parser = argparse.ArgumentParser(description='Run the cosserat-pf unit tests.')
    parser.add_argument('--module', '-m', type=str, help='Execute a specific test module by name')
    parser.add_argument('--coverage', '-c', action='store_true', help='Execute tests with coverage measurement')
    parser.add_argument('--benchmarks', '-b', action='store_true', help='Also execute the desk-scale benchmark runs')
    args = parser.parse_args()
    if args.benchmarks:
        os.environ[BENCHMARK_FLAG] = "1"
    if args.coverage:
        exit_code = run_coverage_report()
    elif args.module:
        exit_code = run_specific_test_module(args.module)
    else:
        exit_code = run_all_tests()
    sys.exit(exit_code)
