int acceptance_unused_test_demand_response;
