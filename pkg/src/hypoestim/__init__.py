"""Parameter estimation for partially observed second-order hypoelliptic diffusions."""
