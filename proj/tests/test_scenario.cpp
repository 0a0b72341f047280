int acceptance_unused_test_scenario;
