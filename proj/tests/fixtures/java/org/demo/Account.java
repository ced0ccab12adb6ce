package org.demo;

/** A bank account. */
public class Account {
  private long balance;

  public Account(long initial) {
    if (initial < 0) {
      throw new IllegalArgumentException("negative");
    }
    balance = initial;
  }

  public boolean withdraw(long amount) {
    if (amount > 0 && amount <= balance) {
      balance -= amount;
      return true;
    }
    return false;
  }

  public long balance() {
    return balance;
  }
}
