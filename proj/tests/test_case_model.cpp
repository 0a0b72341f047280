int acceptance_unused_test_case_model;
