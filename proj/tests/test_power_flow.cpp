int acceptance_unused_test_power_flow;
