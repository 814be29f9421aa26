#pragma once

namespace reference {

// Student-t CDF reference values computed at 40 significant digits.
struct CdfPoint {
  double t, df, cdf;
};
inline constexpr CdfPoint kCdf[] = {
    {1, 1, 0.75},
    {2, 10, 0.96330598261462981719},
    {0, 5, 0.5},
    {-3.121, 48, 0.0015244097930213793468},
    {2.591, 48, 0.99368091774093256796},
    {9.33, 84.35, 0.99999999999999380123},
    {4.356, 48, 0.99996532370127450911},
    {-5.163, 48, 2.3085506427543572687e-6},
    {1.407, 48, 0.91706515008398228491},
    {-0.534, 48, 0.29790306251604617741},
    {-4.228, 3, 0.01210107354366135475},
    {-2.5242, 1, 0.12006524196583317204},
    {-10.2615, 250, 3.8013560051462553887e-21},
    {-9.7409, 1000, 8.773108772636773016e-22},
    {-10.608, 120, 2.9955412453139742521e-19},
    {-6.8472, 1.5, 0.020693360910257899202},
    {-1.5925, 1.5, 0.14541910146430944857},
    {-6.2241, 250, 1.0149206164420449785e-9},
    {-1.8115, 1000, 0.035181698864460174219},
    {-9.0288, 7.25, 0.000016845653766378872144},
    {3.135, 1000, 0.99911566822543128657},
    {10.745, 1000, 1.0},
    {2.053, 1, 0.85572030285787175523},
    {11.4301, 1, 0.97222233754990937601},
    {1.36, 3, 0.866494829156479},
    {-5.0494, 3, 0.0074914082546463069465},
    {0.9765, 1000, 0.83547354526025291522},
    {-4.5964, 4, 0.0050290742704063005033},
    {-9.5267, 1000, 5.913790499737576281e-21},
    {3.3339, 30, 0.99885614740514396253},
    {-9.6617, 1.5, 0.012449368598957380341},
    {1.5448, 5000, 0.93877103355313511282},
    {-7.057, 250, 8.3437796311179523564e-12},
    {-1.7378, 20, 0.048810480156894160964},
    {-0.8256, 84.35, 0.20568000089365976452},
    {-3.322, 7.25, 0.0060495138638689469044},
    {7.0651, 7.25, 0.99991532547640262778},
    {-10.0355, 15, 2.3845864772792154633e-8},
    {0.6047, 20, 0.72391111644084928072},
    {5.5067, 15, 0.99996985392328296803},
    {2.615, 1.5, 0.91990295167385064226},
    {-9.1664, 60, 2.5927678562407153335e-13},
    {-8.0409, 20, 5.3862723141992257584e-8},
    {-8.3524, 96, 2.5371142637556582324e-13},
    {-1.8792, 1.5, 0.12067307986534693233},
    {6.3497, 1000, 0.99999999983659115123},
    {6.9383, 20, 0.9999995115528855023},
    {-3.8371, 30, 0.00029813128872030410108},
    {2.2649, 1000, 0.98813393375367696694},
    {7.1254, 1.5, 0.98048173066548484831},
};

}  // namespace reference
